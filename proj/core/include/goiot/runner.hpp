#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "goiot/config.hpp"
#include "goiot/metrics.hpp"

namespace goiot {

struct RunOutput {
  RecordTable records;
  RunSummary summary;
};

// Executes the configured slot loop. Fully deterministic in the config
// (which includes the seed); per-slot failures are rethrown with the slot
// index attached.
RunOutput run_scenario(const ScenarioConfig& config);

// Emits records.csv, summary.csv, and manifest.json (the resolved config,
// itself a runnable config file) under out_dir, creating it if needed.
void write_outputs(const RunOutput& output, const ScenarioConfig& config,
                   const std::string& out_dir);

// Seed of sweep replication r. Shared across parameter values, so values are
// compared under common random numbers, and independent of execution order.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication);

struct SweepRow {
  double value = 0.0;
  std::size_t replications = 0;  // successful cells
  std::size_t failures = 0;
  std::vector<std::string> metric_names;
  std::vector<double> means;
  std::vector<double> sems;  // standard error over replications
  std::vector<std::string> errors;
};

struct SweepResult {
  std::string parameter;
  std::vector<SweepRow> rows;
};

// Cross product of values x seeds, one row per value with seed-averaged
// numeric summary entries. Cell failures are recorded in the row, not fatal.
// parameter is one of "v", "effectiveness_target", "subspace_dimension"
// (the latter two only for the sensing scenario).
SweepResult sweep(const ScenarioConfig& base, const std::string& parameter,
                  const std::vector<double>& values, std::size_t seeds);

void write_sweep_csv(const SweepResult& result, const std::string& path);

}  // namespace goiot
