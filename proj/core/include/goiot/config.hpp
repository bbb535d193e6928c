#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "goiot/model.hpp"

namespace goiot {

enum class Scenario { kSensing, kInference, kFl };

const char* scenario_name(Scenario scenario);
Scenario parse_scenario(const std::string& name);

struct DeviceSpec {
  std::size_t count = 30;
  double area_side = 10.0;
  double max_cpu_frequency = 1.5e9;
  double cpu_energy_coefficient = 1e-27;
  double max_transmit_power = 0.25;
};

struct SensingSection {
  std::size_t subspace_dimension = 5;
  std::size_t frequency_cap = 8;
  double noise_variance = 1e-4;
  double mse_max = 1e-2;
  double effectiveness_target = 0.3;
  double quantizer_range = 2.0;
  int max_bits = 12;
};

struct InferenceSection {
  std::string compression_family = "go";
  double arrival_rate = 0.6;
  double delay_bound = 0.2;
  double accuracy_target = 0.95;
  double classify_cycles = 2.5e7;
  double local_classify_cycles = 1e7;
  double local_accuracy_penalty = 0.05;
  double es_frequency_cap_total = 1.25e10;
  double es_energy_coefficient = 1e-29;
  std::size_t frequency_levels = 8;
  std::size_t tx_levels = 8;
  double max_tx_bits = 28000.0;
};

struct FlSection {
  double model_size_bits = 1e6;
  double cycles_per_sample = 5e5;
  int batch = 32;
  double aggregation_cycles = 2e8;
  double es_frequency_cap = 1e10;
  double es_energy_coefficient = 1e-29;
  double transmit_power = 0.1;
  double latency_bound = 0.2;
  double initial_accuracy = 0.3;
  double target_before = 0.7;
  double target_after = 0.8;
  long target_step_iteration = 450;
  double a_max = 0.95;
  double eta = 0.03;
  double quantization_penalty = 0.15;
  double participation_penalty = 0.25;
  double noise_sd = 0.005;
  std::size_t frequency_levels = 4;
};

// Full experiment description. Only the section matching `scenario` is
// consulted (and only that section may appear in a config file). For the
// fl scenario, slot_duration doubles as the training-iteration period.
struct ScenarioConfig {
  Scenario scenario = Scenario::kSensing;
  std::uint64_t seed = 1;
  long slots = 100;
  double v = 0.0;
  double burn_in_fraction = 0.2;
  double slot_duration = 0.01;
  DeviceSpec devices;
  RadioConfig radio;
  SensingSection sensing;
  InferenceSection inference;
  FlSection fl;
};

// Baseline configuration per scenario, matching the experiment setups the
// defaults were tuned against.
ScenarioConfig default_config(Scenario scenario);

// Strict parse: unknown keys, wrong types, and out-of-range values raise
// ConfigInvalid naming the offending key path. Absent keys fall back to the
// scenario's defaults.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);

// Serialize the fully resolved configuration. Parsing the result yields an
// identical configuration, so emitted manifests are themselves runnable.
std::string to_json_text(const ScenarioConfig& config);

}  // namespace goiot
