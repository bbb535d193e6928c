#include "goiot/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include "goiot/errors.hpp"
#include "goiot/fl.hpp"
#include "goiot/inference.hpp"
#include "goiot/model.hpp"
#include "goiot/opt.hpp"
#include "goiot/rng.hpp"
#include "goiot/sensing.hpp"

namespace goiot {

namespace {

// Devices are placed uniformly at random in the square; the edge server /
// access point sits at its center. Placement is drawn once per run, before
// any per-slot randomness.
std::vector<DeviceProfile> draw_devices(const ScenarioConfig& config,
                                        RandomStream& stream) {
  std::vector<DeviceProfile> devices(config.devices.count);
  for (std::size_t k = 0; k < devices.size(); ++k) {
    devices[k].id = static_cast<int>(k);
    devices[k].x = stream.uniform(0.0, config.devices.area_side);
    devices[k].y = stream.uniform(0.0, config.devices.area_side);
    devices[k].max_cpu_frequency = config.devices.max_cpu_frequency;
    devices[k].cpu_energy_coefficient = config.devices.cpu_energy_coefficient;
    devices[k].max_transmit_power = config.devices.max_transmit_power;
  }
  return devices;
}

std::vector<double> distances_to_center(const std::vector<DeviceProfile>& devices,
                                        double area_side) {
  std::vector<double> distances(devices.size());
  const double cx = area_side / 2.0;
  const double cy = area_side / 2.0;
  for (std::size_t k = 0; k < devices.size(); ++k) {
    distances[k] = std::hypot(devices[k].x - cx, devices[k].y - cy);
  }
  return distances;
}

void draw_gains(const std::vector<double>& distances, const RadioConfig& radio,
                RandomStream& stream, std::vector<double>& gains) {
  gains.resize(distances.size());
  for (std::size_t k = 0; k < distances.size(); ++k) {
    gains[k] = pathloss_rayleigh_gain(distances[k], radio, stream.exponential1());
  }
}

[[noreturn]] void rethrow_with_slot(long slot, const Error& e) {
  throw Error("slot " + std::to_string(slot) + ": " + e.what());
}

void add_stability_entries(RunSummary& summary, const VirtualQueueSet& queues) {
  for (std::size_t i = 0; i < queues.size(); ++i) {
    const std::string prefix = "stability." + queues.at(i).name;
    try {
      const StabilityReport report = mean_rate_stability(queues.trace(i));
      summary.add_number(prefix + ".slope", report.slope);
      summary.add_number(prefix + ".stable", report.stable ? 1.0 : 0.0);
      summary.add_text(prefix + ".status", "ok");
    } catch (const TraceTooShort&) {
      summary.add_text(prefix + ".status", "trace_too_short");
    }
    summary.add_number("queue." + queues.at(i).name + ".final", queues.at(i).value);
  }
}

void add_common_entries(RunSummary& summary, const ScenarioConfig& config,
                        long window_begin, long rows) {
  summary.add_text("scenario", scenario_name(config.scenario));
  summary.add_number("slots", static_cast<double>(rows));
  summary.add_number("window_begin", static_cast<double>(window_begin));
  summary.add_number("devices", static_cast<double>(config.devices.count));
  summary.add_number("v", config.v);
  summary.add_number("seed", static_cast<double>(config.seed));
}

RunOutput run_sensing(const ScenarioConfig& config) {
  RandomStream stream(config.seed, 0);
  const std::vector<DeviceProfile> devices = draw_devices(config, stream);
  const std::vector<double> distances =
      distances_to_center(devices, config.devices.area_side);

  std::vector<std::pair<double, double>> positions(devices.size());
  for (std::size_t k = 0; k < devices.size(); ++k) {
    positions[k] = {devices[k].x, devices[k].y};
  }

  sensing::SensingInstance instance;
  instance.observation.basis = sensing::build_fourier_basis(
      positions, static_cast<int>(config.sensing.subspace_dimension),
      config.devices.area_side, static_cast<int>(config.sensing.frequency_cap));
  instance.observation.noise_variance = config.sensing.noise_variance;
  instance.effectiveness.mse_max = config.sensing.mse_max;
  instance.effectiveness.target = config.sensing.effectiveness_target;
  instance.radio = config.radio;
  instance.slot_duration = config.slot_duration;
  instance.quantizer_range = config.sensing.quantizer_range;
  instance.max_bits = config.sensing.max_bits;
  instance.max_transmit_power.assign(devices.size(),
                                     config.devices.max_transmit_power);

  RunOutput out;
  out.records.columns = {"slot",          "active_count",     "total_power",
                         "mean_bits",     "mse",              "effectiveness",
                         "equal_bits_power", "equal_power_power"};
  for (long slot = 0; slot < config.slots; ++slot) {
    try {
      draw_gains(distances, config.radio, stream, instance.gains);
      const sensing::SensingAction action = sensing::allocate_bits_power(instance);
      const double mse = sensing::action_mse(instance, action.bits);
      const double eff = sensing::effectiveness(mse, config.sensing.mse_max);
      // The two reference policies run on the identical channel draw so
      // per-slot power comparisons are paired.
      const sensing::SensingAction equal_bits = sensing::baseline_equal_bits(instance);
      const sensing::SensingAction equal_power = sensing::baseline_equal_power(instance);
      double bit_sum = 0.0;
      for (int b : action.bits) bit_sum += b;
      out.records.append({static_cast<double>(slot),
                          static_cast<double>(action.active_count()),
                          action.total_power(),
                          bit_sum / static_cast<double>(devices.size()), mse, eff,
                          equal_bits.total_power(), equal_power.total_power()});
    } catch (const Error& e) {
      rethrow_with_slot(slot, e);
    }
  }

  const long begin = burn_in_begin(config.slots, config.burn_in_fraction);
  add_common_entries(out.summary, config, begin, config.slots);
  if (begin < config.slots) {
    out.summary.add_number("mean_active_count",
                           window_mean(out.records, "active_count", begin));
    out.summary.add_number("mean_total_power",
                           window_mean(out.records, "total_power", begin));
    out.summary.add_number("mean_bits", window_mean(out.records, "mean_bits", begin));
    out.summary.add_number("mean_mse", window_mean(out.records, "mse", begin));
    out.summary.add_number("mean_effectiveness",
                           window_mean(out.records, "effectiveness", begin));
    out.summary.add_number(
        "effectiveness_violation_fraction",
        window_violation_fraction(out.records, "effectiveness", begin,
                                  config.sensing.effectiveness_target, -1));
    out.summary.add_number("mean_equal_bits_power",
                           window_mean(out.records, "equal_bits_power", begin));
    out.summary.add_number("mean_equal_power_power",
                           window_mean(out.records, "equal_power_power", begin));
  }
  return out;
}

inference::CompressionProfile make_compression_profile(const InferenceSection& section) {
  inference::CompressionProfile profile;
  profile.family = section.compression_family;
  profile.local_accuracy_penalty = section.local_accuracy_penalty;
  // Goal-oriented encodings keep task-relevant detail at every budget; plain
  // downsampling loses a fixed slice of accuracy at the same bit budget.
  profile.levels = {{2000.0, 2e6, 0.92},
                    {4000.0, 4e6, 0.95},
                    {8000.0, 8e6, 0.97},
                    {16000.0, 1.6e7, 0.98}};
  if (section.compression_family == "downsampling") {
    for (auto& level : profile.levels) level.accuracy -= 0.04;
  }
  profile.validate();
  return profile;
}

RunOutput run_inference(const ScenarioConfig& config) {
  RandomStream stream(config.seed, 0);
  const std::vector<DeviceProfile> devices = draw_devices(config, stream);
  const std::vector<double> distances =
      distances_to_center(devices, config.devices.area_side);
  const std::size_t count = devices.size();

  inference::InferenceParams params;
  params.profile = make_compression_profile(config.inference);
  params.radio = config.radio;
  params.slot_duration = config.slot_duration;
  params.classify_cycles = config.inference.classify_cycles;
  params.local_classify_cycles = config.inference.local_classify_cycles;
  params.cpu_energy_coefficient = config.devices.cpu_energy_coefficient;
  params.es_energy_coefficient = config.inference.es_energy_coefficient;
  params.max_cpu_frequency = config.devices.max_cpu_frequency;
  params.max_transmit_power = config.devices.max_transmit_power;
  params.es_frequency_cap =
      config.inference.es_frequency_cap_total / static_cast<double>(count);
  params.arrival_rate = config.inference.arrival_rate;

  const inference::InferenceGrids grids = inference::InferenceGrids::build(
      params, static_cast<int>(config.inference.frequency_levels),
      static_cast<int>(config.inference.tx_levels), config.inference.max_tx_bits);

  VirtualQueueSet queues;
  const std::size_t qd = queues.add({"delay", 0.0, config.inference.delay_bound,
                                     ConstraintDirection::kStayBelow});
  const std::size_t qa = queues.add({"accuracy", 0.0,
                                     config.inference.accuracy_target,
                                     ConstraintDirection::kExceed});

  inference::InferenceState state;
  state.devices.resize(count);

  std::vector<double> accumulators(count, 0.0);
  std::vector<double> arrivals(count, 0.0);
  std::vector<double> gains;

  RunOutput out;
  out.records.columns = {"slot",      "energy",    "delay_estimate",
                         "accuracy",  "occupancy", "admitted",
                         "classified", "queue_delay", "queue_accuracy"};
  for (long slot = 0; slot < config.slots; ++slot) {
    try {
      for (std::size_t k = 0; k < count; ++k) {
        accumulators[k] += config.inference.arrival_rate;
        const double whole = std::floor(accumulators[k] + 1e-9);
        arrivals[k] = whole;
        accumulators[k] -= whole;
      }
      draw_gains(distances, config.radio, stream, gains);
      const inference::InferenceAction action = inference::solve_inference_slot(
          state, queues.at(qd), queues.at(qa), TradeoffWeight{config.v}, grids,
          arrivals, gains, params, config.inference.delay_bound,
          config.inference.accuracy_target);
      const inference::SlotMetrics metrics =
          inference::step_inference_slot(state, action, arrivals, gains, params);
      const double delay = inference::e2e_delay_estimate(
          state, config.inference.arrival_rate, config.slot_duration);
      queues.apply(qd, delay);
      queues.apply(qa, metrics.accuracy);

      double occupancy = 0.0;
      for (const auto& q : state.devices) occupancy += q.occupancy();
      out.records.append({static_cast<double>(slot), metrics.energy, delay,
                          metrics.accuracy, occupancy, metrics.admitted,
                          metrics.classified, queues.at(qd).value,
                          queues.at(qa).value});
    } catch (const Error& e) {
      rethrow_with_slot(slot, e);
    }
  }

  const long begin = burn_in_begin(config.slots, config.burn_in_fraction);
  add_common_entries(out.summary, config, begin, config.slots);
  if (begin < config.slots) {
    out.summary.add_number("mean_energy", window_mean(out.records, "energy", begin));
    out.summary.add_number("mean_power",
                           window_mean(out.records, "energy", begin) /
                               config.slot_duration);
    out.summary.add_number("mean_delay",
                           window_mean(out.records, "delay_estimate", begin));
    out.summary.add_number("mean_accuracy",
                           window_mean(out.records, "accuracy", begin));
    out.summary.add_number("mean_occupancy",
                           window_mean(out.records, "occupancy", begin));
    out.summary.add_number(
        "delay_violation_fraction",
        window_violation_fraction(out.records, "delay_estimate", begin,
                                  config.inference.delay_bound, +1));
    out.summary.add_number(
        "accuracy_violation_fraction",
        window_violation_fraction(out.records, "accuracy", begin,
                                  config.inference.accuracy_target, -1));
    out.summary.add_number("admitted_total", state.admitted_total);
    out.summary.add_number("classified_total", state.classified_total);
  }
  add_stability_entries(out.summary, queues);
  return out;
}

RunOutput run_fl(const ScenarioConfig& config) {
  RandomStream stream(config.seed, 0);
  const std::vector<DeviceProfile> devices = draw_devices(config, stream);
  const std::vector<double> distances =
      distances_to_center(devices, config.devices.area_side);

  fl::FLParams params;
  params.devices = devices;
  params.radio = config.radio;
  params.model_size_bits = config.fl.model_size_bits;
  params.cycles_per_sample = config.fl.cycles_per_sample;
  params.batch = config.fl.batch;
  params.aggregation_cycles = config.fl.aggregation_cycles;
  params.es_frequency_cap = config.fl.es_frequency_cap;
  params.es_energy_coefficient = config.fl.es_energy_coefficient;
  params.transmit_power = config.fl.transmit_power;
  params.iteration_period = config.slot_duration;
  params.latency_bound = config.fl.latency_bound;
  params.curve.a_max = config.fl.a_max;
  params.curve.eta = config.fl.eta;
  params.curve.quantization_penalty = config.fl.quantization_penalty;
  params.curve.participation_penalty = config.fl.participation_penalty;
  params.curve.noise_sd = config.fl.noise_sd;

  const fl::FLGrids grids = fl::FLGrids::build(params, config.fl.frequency_levels);

  fl::FLState state;
  state.accuracy = config.fl.initial_accuracy;
  state.iteration = 0;
  state.schedule = {config.fl.target_before, config.fl.target_after,
                    config.fl.target_step_iteration};

  VirtualQueueSet queues;
  const std::size_t ql = queues.add({"latency", 0.0, config.fl.latency_bound,
                                     ConstraintDirection::kStayBelow});
  const std::size_t qa = queues.add({"accuracy", 0.0, config.fl.target_before,
                                     ConstraintDirection::kExceed});

  std::vector<double> gains;
  const std::size_t device_count = devices.size();

  RunOutput out;
  out.records.columns = {"slot",    "accuracy",       "target",
                         "power",   "latency",        "selected",
                         "mean_bits", "queue_latency", "queue_accuracy"};
  for (long slot = 0; slot < config.slots; ++slot) {
    try {
      draw_gains(distances, config.radio, stream, gains);
      const double target = state.schedule.target_at(state.iteration);
      queues.mutable_at(qa).target = target;

      const fl::FLAction action =
          fl::solve_fl_slot(state, queues.at(ql), queues.at(qa),
                            TradeoffWeight{config.v}, grids, gains, params);
      const bool skipped = action.selection.empty();
      const double latency =
          skipped ? 0.0 : fl::iteration_latency(action, gains, params);
      const double power = fl::iteration_power(action, gains, params);
      const double metric =
          fl::predicted_accuracy_metric(state, action, params.curve, device_count);
      const double z = stream.standard_normal();
      state = fl::surrogate_accuracy_step(state, action, params.curve, z,
                                          device_count);
      queues.apply(ql, latency);
      queues.apply(qa, metric);

      double bit_sum = 0.0;
      for (int b : action.bits) bit_sum += b;
      const double mean_bits =
          skipped ? 0.0 : bit_sum / static_cast<double>(action.selection.size());
      out.records.append({static_cast<double>(slot), state.accuracy, target, power,
                          latency, static_cast<double>(action.selection.size()),
                          mean_bits, queues.at(ql).value, queues.at(qa).value});
    } catch (const Error& e) {
      rethrow_with_slot(slot, e);
    }
  }

  const long begin = burn_in_begin(config.slots, config.burn_in_fraction);
  add_common_entries(out.summary, config, begin, config.slots);
  if (begin < config.slots) {
    out.summary.add_number("mean_accuracy",
                           window_mean(out.records, "accuracy", begin));
    out.summary.add_number("mean_power", window_mean(out.records, "power", begin));
    out.summary.add_number("mean_latency",
                           window_mean(out.records, "latency", begin));
    out.summary.add_number("mean_selected",
                           window_mean(out.records, "selected", begin));
    out.summary.add_number(
        "latency_violation_fraction",
        window_violation_fraction(out.records, "latency", begin,
                                  config.fl.latency_bound, +1));
  }
  add_stability_entries(out.summary, queues);
  return out;
}

}  // namespace

RunOutput run_scenario(const ScenarioConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  RunOutput out;
  switch (config.scenario) {
    case Scenario::kSensing: out = run_sensing(config); break;
    case Scenario::kInference: out = run_inference(config); break;
    case Scenario::kFl: out = run_fl(config); break;
  }
  out.summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return out;
}

void write_outputs(const RunOutput& output, const ScenarioConfig& config,
                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir), ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);
  write_records_csv(output.records, (fs::path(out_dir) / "records.csv").string());
  write_summary_csv(output.summary, (fs::path(out_dir) / "summary.csv").string());

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw IoError("cannot open for writing: " + manifest_path);
  manifest << to_json_text(config);
  manifest.flush();
  if (!manifest) throw IoError("write failed: " + manifest_path);
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t replication) {
  return derive_stream_seed(base_seed, replication);
}

namespace {

void apply_sweep_parameter(ScenarioConfig& config, const std::string& parameter,
                           double value) {
  if (parameter == "v") {
    if (value < 0) throw ConfigInvalid("sweep: v values must be >= 0");
    config.v = value;
    return;
  }
  if (parameter == "effectiveness_target") {
    if (config.scenario != Scenario::kSensing) {
      throw ConfigInvalid("sweep: effectiveness_target applies to the sensing scenario");
    }
    if (value < 0 || value >= 1) {
      throw ConfigInvalid("sweep: effectiveness_target values must lie in [0, 1)");
    }
    config.sensing.effectiveness_target = value;
    return;
  }
  if (parameter == "subspace_dimension") {
    if (config.scenario != Scenario::kSensing) {
      throw ConfigInvalid("sweep: subspace_dimension applies to the sensing scenario");
    }
    const double rounded = std::round(value);
    if (value < 1 || std::abs(value - rounded) > 1e-9) {
      throw ConfigInvalid("sweep: subspace_dimension values must be positive integers");
    }
    if (rounded > static_cast<double>(config.devices.count)) {
      throw ConfigInvalid("sweep: subspace_dimension must not exceed devices.count");
    }
    config.sensing.subspace_dimension = static_cast<std::size_t>(rounded);
    return;
  }
  throw ConfigInvalid("sweep: unknown parameter \"" + parameter +
                      "\" (expected v, effectiveness_target, or subspace_dimension)");
}

}  // namespace

SweepResult sweep(const ScenarioConfig& base, const std::string& parameter,
                  const std::vector<double>& values, std::size_t seeds) {
  if (values.empty()) throw ConfigInvalid("sweep: values must be non-empty");
  if (seeds == 0) throw ConfigInvalid("sweep: seeds must be >= 1");

  SweepResult result;
  result.parameter = parameter;
  for (double value : values) {
    SweepRow row;
    row.value = value;
    std::vector<std::string> names;            // insertion order of first success
    std::map<std::string, std::vector<double>> samples;
    for (std::size_t r = 0; r < seeds; ++r) {
      ScenarioConfig config = base;
      apply_sweep_parameter(config, parameter, value);
      config.seed = replication_seed(base.seed, r);
      try {
        const RunOutput run = run_scenario(config);
        for (const SummaryEntry& e : run.summary.entries) {
          if (!e.numeric) continue;
          if (samples.find(e.name) == samples.end()) names.push_back(e.name);
          samples[e.name].push_back(e.value);
        }
        ++row.replications;
      } catch (const Error& e) {
        ++row.failures;
        row.errors.push_back(e.what());
      }
    }
    for (const std::string& name : names) {
      const std::vector<double>& xs = samples[name];
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      const double sem =
          xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1) /
                                    static_cast<double>(xs.size()))
                        : 0.0;
      row.metric_names.push_back(name);
      row.means.push_back(mean);
      row.sems.push_back(sem);
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);

  // Header comes from the first row that produced metrics; rows missing a
  // metric leave the cell empty.
  std::vector<std::string> names;
  for (const SweepRow& row : result.rows) {
    if (!row.metric_names.empty()) {
      names = row.metric_names;
      break;
    }
  }
  out << result.parameter << ",replications,failures";
  for (const std::string& name : names) {
    out << ",mean_" << name << ",sem_" << name;
  }
  out << '\n';
  for (const SweepRow& row : result.rows) {
    out << format_number(row.value) << ',' << row.replications << ','
        << row.failures;
    for (const std::string& name : names) {
      const auto it =
          std::find(row.metric_names.begin(), row.metric_names.end(), name);
      if (it == row.metric_names.end()) {
        out << ",,";
      } else {
        const std::size_t i =
            static_cast<std::size_t>(it - row.metric_names.begin());
        out << ',' << format_number(row.means[i]) << ','
            << format_number(row.sems[i]);
      }
    }
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace goiot
