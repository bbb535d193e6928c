#include "goiot/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "goiot/errors.hpp"
#include "json.hpp"

namespace goiot {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigInvalid("config: " + path + ": " + message);
}

// Tracks which keys of one JSON object have been consumed so that leftovers
// can be rejected. finish() must run after all reads.
class Cursor {
 public:
  Cursor(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string sub(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  const json* pull(const char* key) {
    auto it = node_.find(key);
    if (it == node_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (used_.find(item.key()) == used_.end()) {
        fail(sub(item.key().c_str()), "unknown key");
      }
    }
  }

  void read_double(const char* key, double& out) {
    const json* v = pull(key);
    if (v == nullptr) return;
    if (!v->is_number()) fail(sub(key), "expected a number");
    out = v->get<double>();
    if (!std::isfinite(out)) fail(sub(key), "must be finite");
  }

  void read_string(const char* key, std::string& out) {
    const json* v = pull(key);
    if (v == nullptr) return;
    if (!v->is_string()) fail(sub(key), "expected a string");
    out = v->get<std::string>();
  }

  template <typename Int>
  void read_integer(const char* key, Int& out) {
    const json* v = pull(key);
    if (v == nullptr) return;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
      fail(sub(key), "expected an integer");
    }
    if constexpr (std::is_unsigned_v<Int>) {
      if (v->is_number_integer() && v->get<long long>() < 0) {
        fail(sub(key), "must be >= 0");
      }
      out = static_cast<Int>(v->get<unsigned long long>());
    } else {
      out = static_cast<Int>(v->get<long long>());
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const char* message) {
  if (!ok) fail(path, message);
}

void parse_devices(Cursor& parent, DeviceSpec& out) {
  const json* node = parent.pull("devices");
  if (node == nullptr) return;
  Cursor c(*node, parent.sub("devices"));
  c.read_integer("count", out.count);
  c.read_double("area_side", out.area_side);
  c.read_double("max_cpu_frequency", out.max_cpu_frequency);
  c.read_double("cpu_energy_coefficient", out.cpu_energy_coefficient);
  c.read_double("max_transmit_power", out.max_transmit_power);
  c.finish();
  require(out.count >= 1, c.sub("count"), "must be >= 1");
  require(out.area_side > 0, c.sub("area_side"), "must be > 0");
  require(out.max_cpu_frequency > 0, c.sub("max_cpu_frequency"), "must be > 0");
  require(out.cpu_energy_coefficient > 0, c.sub("cpu_energy_coefficient"),
          "must be > 0");
  require(out.max_transmit_power > 0, c.sub("max_transmit_power"), "must be > 0");
}

void parse_radio(Cursor& parent, RadioConfig& out) {
  const json* node = parent.pull("radio");
  if (node == nullptr) return;
  Cursor c(*node, parent.sub("radio"));
  c.read_double("bandwidth_per_device", out.bandwidth_per_device);
  c.read_double("noise_psd", out.noise_psd);
  c.read_double("pathloss_exponent", out.pathloss_exponent);
  c.read_double("reference_distance", out.reference_distance);
  c.finish();
  require(out.bandwidth_per_device > 0, c.sub("bandwidth_per_device"), "must be > 0");
  require(out.noise_psd > 0, c.sub("noise_psd"), "must be > 0");
  require(out.pathloss_exponent > 0, c.sub("pathloss_exponent"), "must be > 0");
  require(out.reference_distance > 0, c.sub("reference_distance"), "must be > 0");
}

void parse_sensing(Cursor& parent, SensingSection& out) {
  const json* node = parent.pull("sensing");
  if (node == nullptr) return;
  Cursor c(*node, parent.sub("sensing"));
  c.read_integer("subspace_dimension", out.subspace_dimension);
  c.read_integer("frequency_cap", out.frequency_cap);
  c.read_double("noise_variance", out.noise_variance);
  c.read_double("mse_max", out.mse_max);
  c.read_double("effectiveness_target", out.effectiveness_target);
  c.read_double("quantizer_range", out.quantizer_range);
  c.read_integer("max_bits", out.max_bits);
  c.finish();
  require(out.subspace_dimension >= 1, c.sub("subspace_dimension"), "must be >= 1");
  require(out.frequency_cap >= 1, c.sub("frequency_cap"), "must be >= 1");
  require(out.noise_variance > 0, c.sub("noise_variance"), "must be > 0");
  require(out.mse_max > 0, c.sub("mse_max"), "must be > 0");
  require(out.effectiveness_target >= 0 && out.effectiveness_target < 1,
          c.sub("effectiveness_target"), "must lie in [0, 1)");
  require(out.quantizer_range > 0, c.sub("quantizer_range"), "must be > 0");
  require(out.max_bits >= 1, c.sub("max_bits"), "must be >= 1");
}

void parse_inference(Cursor& parent, InferenceSection& out) {
  const json* node = parent.pull("inference");
  if (node == nullptr) return;
  Cursor c(*node, parent.sub("inference"));
  c.read_string("compression_family", out.compression_family);
  c.read_double("arrival_rate", out.arrival_rate);
  c.read_double("delay_bound", out.delay_bound);
  c.read_double("accuracy_target", out.accuracy_target);
  c.read_double("classify_cycles", out.classify_cycles);
  c.read_double("local_classify_cycles", out.local_classify_cycles);
  c.read_double("local_accuracy_penalty", out.local_accuracy_penalty);
  c.read_double("es_frequency_cap_total", out.es_frequency_cap_total);
  c.read_double("es_energy_coefficient", out.es_energy_coefficient);
  c.read_integer("frequency_levels", out.frequency_levels);
  c.read_integer("tx_levels", out.tx_levels);
  c.read_double("max_tx_bits", out.max_tx_bits);
  c.finish();
  require(out.compression_family == "go" || out.compression_family == "downsampling",
          c.sub("compression_family"), "must be \"go\" or \"downsampling\"");
  require(out.arrival_rate >= 0, c.sub("arrival_rate"), "must be >= 0");
  require(out.delay_bound > 0, c.sub("delay_bound"), "must be > 0");
  require(out.accuracy_target > 0 && out.accuracy_target <= 1,
          c.sub("accuracy_target"), "must lie in (0, 1]");
  require(out.classify_cycles > 0, c.sub("classify_cycles"), "must be > 0");
  require(out.local_classify_cycles > 0, c.sub("local_classify_cycles"),
          "must be > 0");
  require(out.local_accuracy_penalty >= 0, c.sub("local_accuracy_penalty"),
          "must be >= 0");
  require(out.es_frequency_cap_total > 0, c.sub("es_frequency_cap_total"),
          "must be > 0");
  require(out.es_energy_coefficient > 0, c.sub("es_energy_coefficient"),
          "must be > 0");
  require(out.frequency_levels >= 1, c.sub("frequency_levels"), "must be >= 1");
  require(out.tx_levels >= 1, c.sub("tx_levels"), "must be >= 1");
  require(out.max_tx_bits > 0, c.sub("max_tx_bits"), "must be > 0");
}

void parse_fl(Cursor& parent, FlSection& out) {
  const json* node = parent.pull("fl");
  if (node == nullptr) return;
  Cursor c(*node, parent.sub("fl"));
  c.read_double("model_size_bits", out.model_size_bits);
  c.read_double("cycles_per_sample", out.cycles_per_sample);
  c.read_integer("batch", out.batch);
  c.read_double("aggregation_cycles", out.aggregation_cycles);
  c.read_double("es_frequency_cap", out.es_frequency_cap);
  c.read_double("es_energy_coefficient", out.es_energy_coefficient);
  c.read_double("transmit_power", out.transmit_power);
  c.read_double("latency_bound", out.latency_bound);
  c.read_double("initial_accuracy", out.initial_accuracy);
  c.read_double("target_before", out.target_before);
  c.read_double("target_after", out.target_after);
  c.read_integer("target_step_iteration", out.target_step_iteration);
  c.read_double("a_max", out.a_max);
  c.read_double("eta", out.eta);
  c.read_double("quantization_penalty", out.quantization_penalty);
  c.read_double("participation_penalty", out.participation_penalty);
  c.read_double("noise_sd", out.noise_sd);
  c.read_integer("frequency_levels", out.frequency_levels);
  c.finish();
  require(out.model_size_bits >= 0, c.sub("model_size_bits"), "must be >= 0");
  require(out.cycles_per_sample > 0, c.sub("cycles_per_sample"), "must be > 0");
  require(out.batch >= 1, c.sub("batch"), "must be >= 1");
  require(out.aggregation_cycles >= 0, c.sub("aggregation_cycles"), "must be >= 0");
  require(out.es_frequency_cap > 0, c.sub("es_frequency_cap"), "must be > 0");
  require(out.es_energy_coefficient > 0, c.sub("es_energy_coefficient"),
          "must be > 0");
  require(out.transmit_power > 0, c.sub("transmit_power"), "must be > 0");
  require(out.latency_bound > 0, c.sub("latency_bound"), "must be > 0");
  require(out.a_max > 0 && out.a_max <= 1, c.sub("a_max"), "must lie in (0, 1]");
  require(out.initial_accuracy >= 0 && out.initial_accuracy <= out.a_max,
          c.sub("initial_accuracy"), "must lie in [0, a_max]");
  require(out.target_before > 0 && out.target_before <= out.a_max,
          c.sub("target_before"), "must lie in (0, a_max]");
  require(out.target_after > 0 && out.target_after <= out.a_max,
          c.sub("target_after"), "must lie in (0, a_max]");
  require(out.target_step_iteration >= 0, c.sub("target_step_iteration"),
          "must be >= 0");
  require(out.eta > 0 && out.eta <= 1, c.sub("eta"), "must lie in (0, 1]");
  require(out.quantization_penalty >= 0, c.sub("quantization_penalty"),
          "must be >= 0");
  require(out.participation_penalty >= 0, c.sub("participation_penalty"),
          "must be >= 0");
  require(out.noise_sd >= 0, c.sub("noise_sd"), "must be >= 0");
  require(out.frequency_levels >= 1, c.sub("frequency_levels"), "must be >= 1");
}

}  // namespace

const char* scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kSensing: return "sensing";
    case Scenario::kInference: return "inference";
    case Scenario::kFl: return "fl";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "sensing") return Scenario::kSensing;
  if (name == "inference") return Scenario::kInference;
  if (name == "fl") return Scenario::kFl;
  throw ConfigInvalid("config: scenario: expected \"sensing\", \"inference\", or \"fl\", got \"" +
                      name + "\"");
}

ScenarioConfig default_config(Scenario scenario) {
  ScenarioConfig config;
  config.scenario = scenario;
  switch (scenario) {
    case Scenario::kSensing:
      // Struct defaults already describe the sensing setup: 30 devices in a
      // 10 m x 10 m area, 100 kHz per device, 100 channel realizations.
      config.v = 0.0;
      break;
    case Scenario::kInference:
      config.devices.count = 5;
      config.devices.area_side = 40.0;
      config.radio.bandwidth_per_device = 1e6;
      config.slots = 20000;
      config.slot_duration = 0.01;
      config.v = 10.0;
      break;
    case Scenario::kFl:
      config.devices.count = 10;
      config.devices.area_side = 20.0;
      config.radio.bandwidth_per_device = 1e6;
      config.slots = 1000;
      config.slot_duration = 0.2;
      config.v = 0.1;
      break;
  }
  return config;
}

ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid(std::string("config: not valid JSON: ") + e.what());
  }
  Cursor c(root, "");

  std::string scenario_label;
  {
    const json* v = c.pull("scenario");
    if (v == nullptr) fail("scenario", "required key missing");
    if (!v->is_string()) fail("scenario", "expected a string");
    scenario_label = v->get<std::string>();
  }
  ScenarioConfig config = default_config(parse_scenario(scenario_label));

  c.read_integer("seed", config.seed);
  c.read_integer("slots", config.slots);
  c.read_double("v", config.v);
  c.read_double("burn_in_fraction", config.burn_in_fraction);
  c.read_double("slot_duration", config.slot_duration);
  require(config.slots >= 0, "slots", "must be >= 0");
  require(config.v >= 0, "v", "must be >= 0");
  require(config.burn_in_fraction >= 0 && config.burn_in_fraction < 1,
          "burn_in_fraction", "must lie in [0, 1)");
  require(config.slot_duration > 0, "slot_duration", "must be > 0");

  parse_devices(c, config.devices);
  parse_radio(c, config.radio);
  switch (config.scenario) {
    case Scenario::kSensing: parse_sensing(c, config.sensing); break;
    case Scenario::kInference: parse_inference(c, config.inference); break;
    case Scenario::kFl: parse_fl(c, config.fl); break;
  }
  c.finish();

  if (config.scenario == Scenario::kSensing &&
      config.sensing.subspace_dimension > config.devices.count) {
    fail("sensing.subspace_dimension", "must not exceed devices.count");
  }
  return config;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config file: " + path);
  return parse_config_text(buf.str());
}

std::string to_json_text(const ScenarioConfig& config) {
  json root;
  root["scenario"] = scenario_name(config.scenario);
  root["seed"] = config.seed;
  root["slots"] = config.slots;
  root["v"] = config.v;
  root["burn_in_fraction"] = config.burn_in_fraction;
  root["slot_duration"] = config.slot_duration;

  json devices;
  devices["count"] = config.devices.count;
  devices["area_side"] = config.devices.area_side;
  devices["max_cpu_frequency"] = config.devices.max_cpu_frequency;
  devices["cpu_energy_coefficient"] = config.devices.cpu_energy_coefficient;
  devices["max_transmit_power"] = config.devices.max_transmit_power;
  root["devices"] = std::move(devices);

  json radio;
  radio["bandwidth_per_device"] = config.radio.bandwidth_per_device;
  radio["noise_psd"] = config.radio.noise_psd;
  radio["pathloss_exponent"] = config.radio.pathloss_exponent;
  radio["reference_distance"] = config.radio.reference_distance;
  root["radio"] = std::move(radio);

  switch (config.scenario) {
    case Scenario::kSensing: {
      json s;
      s["subspace_dimension"] = config.sensing.subspace_dimension;
      s["frequency_cap"] = config.sensing.frequency_cap;
      s["noise_variance"] = config.sensing.noise_variance;
      s["mse_max"] = config.sensing.mse_max;
      s["effectiveness_target"] = config.sensing.effectiveness_target;
      s["quantizer_range"] = config.sensing.quantizer_range;
      s["max_bits"] = config.sensing.max_bits;
      root["sensing"] = std::move(s);
      break;
    }
    case Scenario::kInference: {
      json s;
      s["compression_family"] = config.inference.compression_family;
      s["arrival_rate"] = config.inference.arrival_rate;
      s["delay_bound"] = config.inference.delay_bound;
      s["accuracy_target"] = config.inference.accuracy_target;
      s["classify_cycles"] = config.inference.classify_cycles;
      s["local_classify_cycles"] = config.inference.local_classify_cycles;
      s["local_accuracy_penalty"] = config.inference.local_accuracy_penalty;
      s["es_frequency_cap_total"] = config.inference.es_frequency_cap_total;
      s["es_energy_coefficient"] = config.inference.es_energy_coefficient;
      s["frequency_levels"] = config.inference.frequency_levels;
      s["tx_levels"] = config.inference.tx_levels;
      s["max_tx_bits"] = config.inference.max_tx_bits;
      root["inference"] = std::move(s);
      break;
    }
    case Scenario::kFl: {
      json s;
      s["model_size_bits"] = config.fl.model_size_bits;
      s["cycles_per_sample"] = config.fl.cycles_per_sample;
      s["batch"] = config.fl.batch;
      s["aggregation_cycles"] = config.fl.aggregation_cycles;
      s["es_frequency_cap"] = config.fl.es_frequency_cap;
      s["es_energy_coefficient"] = config.fl.es_energy_coefficient;
      s["transmit_power"] = config.fl.transmit_power;
      s["latency_bound"] = config.fl.latency_bound;
      s["initial_accuracy"] = config.fl.initial_accuracy;
      s["target_before"] = config.fl.target_before;
      s["target_after"] = config.fl.target_after;
      s["target_step_iteration"] = config.fl.target_step_iteration;
      s["a_max"] = config.fl.a_max;
      s["eta"] = config.fl.eta;
      s["quantization_penalty"] = config.fl.quantization_penalty;
      s["participation_penalty"] = config.fl.participation_penalty;
      s["noise_sd"] = config.fl.noise_sd;
      s["frequency_levels"] = config.fl.frequency_levels;
      root["fl"] = std::move(s);
      break;
    }
  }
  return root.dump(2) + "\n";
}

}  // namespace goiot
