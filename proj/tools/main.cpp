#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "goiot/config.hpp"
#include "goiot/errors.hpp"
#include "goiot/runner.hpp"
#include "goiot/sensing.hpp"

namespace {

// sysexits-style categories so scripts can tell classes of failure apart.
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 65;
constexpr int kExitRuntime = 70;
constexpr int kExitIo = 74;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Logging {
  bool quiet = false;
  bool verbose = false;
};

goiot::ScenarioConfig resolve_config(const std::string& scenario,
                                     const std::string& config_path) {
  if (!config_path.empty()) {
    goiot::ScenarioConfig config = goiot::load_config_file(config_path);
    if (!scenario.empty() &&
        goiot::parse_scenario(scenario) != config.scenario) {
      throw UsageError("--scenario disagrees with the scenario in " + config_path);
    }
    return config;
  }
  if (scenario.empty()) {
    throw UsageError("either --scenario or --config is required");
  }
  return goiot::default_config(goiot::parse_scenario(scenario));
}

void print_summary(const goiot::RunSummary& summary, const Logging& log) {
  if (log.quiet) return;
  if (log.verbose) {
    for (const goiot::SummaryEntry& e : summary.entries) {
      std::printf("  %s = %s\n", e.name.c_str(), e.text.c_str());
    }
  }
}

int do_run(const goiot::ScenarioConfig& config, const std::string& out_dir,
           const Logging& log) {
  const goiot::RunOutput out = goiot::run_scenario(config);
  goiot::write_outputs(out, config, out_dir);
  if (!log.quiet) {
    std::printf("run: scenario=%s slots=%ld seed=%" PRIu64 " wall=%.2fs\n",
                goiot::scenario_name(config.scenario), config.slots, config.seed,
                out.summary.wall_seconds);
    std::printf("outputs: %s/records.csv, %s/summary.csv, %s/manifest.json\n",
                out_dir.c_str(), out_dir.c_str(), out_dir.c_str());
  }
  print_summary(out.summary, log);
  return 0;
}

int do_sweep(const goiot::ScenarioConfig& base, const std::string& parameter,
             const std::vector<double>& values, std::size_t seeds,
             const std::string& out_dir, const Logging& log) {
  const goiot::SweepResult result = goiot::sweep(base, parameter, values, seeds);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw goiot::IoError("cannot create output directory: " + out_dir);
  const std::string path = out_dir + "/sweep.csv";
  goiot::write_sweep_csv(result, path);
  if (!log.quiet) {
    std::printf("sweep: parameter=%s values=%zu seeds=%zu -> %s\n",
                parameter.c_str(), values.size(), seeds, path.c_str());
    for (const goiot::SweepRow& row : result.rows) {
      std::printf("  %s=%s replications=%zu failures=%zu\n", parameter.c_str(),
                  goiot::format_number(row.value).c_str(), row.replications,
                  row.failures);
      if (log.verbose) {
        for (std::size_t i = 0; i < row.metric_names.size(); ++i) {
          std::printf("    %s = %s (sem %s)\n", row.metric_names[i].c_str(),
                      goiot::format_number(row.means[i]).c_str(),
                      goiot::format_number(row.sems[i]).c_str());
        }
        for (const std::string& err : row.errors) {
          std::printf("    failed: %s\n", err.c_str());
        }
      }
    }
  }
  return 0;
}

int do_oracle_check(int instances, std::uint64_t seed, double ratio_bound,
                    const Logging& log) {
  const goiot::sensing::OracleAuditReport report =
      goiot::sensing::run_oracle_audit(instances, seed, ratio_bound);
  const bool never_beaten = report.oracle_wins == report.feasible;
  const bool always_feasible = report.greedy_infeasible == 0;
  const bool ratio_ok =
      report.feasible == 0 ||
      static_cast<double>(report.within_ratio) >=
          0.95 * static_cast<double>(report.feasible);
  const bool ok = never_beaten && always_feasible && ratio_ok;
  if (!log.quiet) {
    std::printf("oracle-check: instances=%d feasible=%d greedy_infeasible=%d\n",
                report.instances, report.feasible, report.greedy_infeasible);
    std::printf("oracle-check: oracle_wins=%d within_%.3gx=%d worst_ratio=%.6g mean_ratio=%.6g\n",
                report.oracle_wins, report.ratio_bound, report.within_ratio,
                report.worst_ratio, report.mean_ratio);
    std::printf("oracle-check: %s\n", ok ? "PASS" : "FAIL");
  }
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented IoT network simulator"};
  app.require_subcommand(1);

  Logging log;
  app.add_flag("--quiet", log.quiet, "Suppress normal output");
  app.add_flag("--verbose", log.verbose, "Print full summaries");
  // Let --quiet/--verbose appear after the subcommand name as well.
  app.fallthrough();

  std::string scenario;
  std::string config_path;
  std::string out_dir = "out";
  long slots = -1;
  std::uint64_t seed = 0;

  CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario and write CSV outputs");
  run_cmd->add_option("--scenario", scenario, "sensing | inference | fl");
  run_cmd->add_option("--config", config_path, "JSON config file (see docs)");
  CLI::Option* run_seed = run_cmd->add_option("--seed", seed, "Override the RNG seed");
  CLI::Option* run_slots = run_cmd->add_option("--slots", slots, "Override the slot count");
  run_cmd->add_option("--out", out_dir, "Output directory (default: out)");

  std::string parameter;
  std::vector<double> values;
  std::size_t seeds = 5;

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Replicate runs over a parameter grid");
  sweep_cmd->add_option("--scenario", scenario, "sensing | inference | fl");
  sweep_cmd->add_option("--config", config_path, "JSON config file used as the base");
  sweep_cmd->add_option("--param", parameter, "v | effectiveness_target | subspace_dimension")
      ->required();
  sweep_cmd->add_option("--values", values, "Comma-separated parameter values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", seeds, "Replications per value (default: 5)");
  CLI::Option* sweep_seed = sweep_cmd->add_option("--seed", seed, "Override the base seed");
  CLI::Option* sweep_slots = sweep_cmd->add_option("--slots", slots, "Override the slot count");
  sweep_cmd->add_option("--out", out_dir, "Output directory (default: out)");

  int instances = 200;
  std::uint64_t audit_seed = 1;
  double ratio_bound = 1.5;

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle-check", "Audit the greedy sensing allocator against brute force");
  oracle_cmd->add_option("--instances", instances, "Random instances (default: 200)");
  oracle_cmd->add_option("--seed", audit_seed, "Audit RNG seed (default: 1)");
  oracle_cmd->add_option("--ratio-bound", ratio_bound, "Power ratio bound (default: 1.5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (oracle_cmd->parsed()) {
      if (instances <= 0) throw UsageError("--instances must be >= 1");
      return do_oracle_check(instances, audit_seed, ratio_bound, log);
    }
    goiot::ScenarioConfig config = resolve_config(scenario, config_path);
    if (run_cmd->parsed()) {
      if (run_seed->count() > 0) config.seed = seed;
      if (run_slots->count() > 0) {
        if (slots < 0) throw UsageError("--slots must be >= 0");
        config.slots = slots;
      }
      return do_run(config, out_dir, log);
    }
    if (sweep_seed->count() > 0) config.seed = seed;
    if (sweep_slots->count() > 0) {
      if (slots < 0) throw UsageError("--slots must be >= 0");
      config.slots = slots;
    }
    return do_sweep(config, parameter, values, seeds, out_dir, log);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const goiot::ConfigInvalid& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const goiot::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
