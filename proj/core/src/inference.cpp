#include "goiot/inference.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "goiot/errors.hpp"

namespace goiot::inference {

void CompressionProfile::validate() const {
  if (levels.size() < 2) {
    throw ConfigInvalid("compression family '" + family + "': need at least 2 levels");
  }
  if (local_accuracy_penalty < 0.0 || local_accuracy_penalty > 1.0) {
    throw ConfigInvalid("compression family '" + family + "': local_accuracy_penalty outside [0, 1]");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& level = levels[i];
    if (level.bits_per_image <= 0.0 || level.encode_cycles <= 0.0) {
      throw ConfigInvalid("compression family '" + family + "': level " + std::to_string(i) +
                          " has non-positive bits or cycles");
    }
    if (level.accuracy < 0.0 || level.accuracy > 1.0) {
      throw ConfigInvalid("compression family '" + family + "': level " + std::to_string(i) +
                          " accuracy outside [0, 1]");
    }
    if (i > 0) {
      if (level.bits_per_image <= levels[i - 1].bits_per_image) {
        throw ConfigInvalid("compression family '" + family + "': bits_per_image must increase");
      }
      if (level.accuracy < levels[i - 1].accuracy) {
        throw ConfigInvalid("compression family '" + family +
                            "': accuracy must be non-decreasing in bits");
      }
    }
  }
}

namespace {

// floor with a nudge so exact-integer capacities do not lose a unit to
// floating-point representation of f * tau / cycles.
int floor_capacity(double x) {
  return x <= 0.0 ? 0 : static_cast<int>(std::floor(x + 1e-9));
}

struct DeviceSlotResult {
  DeviceQueues next;
  double energy = 0.0;
  double accuracy = 0.0;
  double admitted = 0.0;
  double classified = 0.0;
  bool feasible = true;
};

DeviceSlotResult simulate_device_slot(const DeviceQueues& queues, const DeviceAction& action,
                                      double arrivals, double gain,
                                      const InferenceParams& params) {
  DeviceSlotResult result;
  if (action.level < 0 ||
      action.level >= static_cast<int>(params.profile.levels.size()) ||
      action.local_frequency < 0.0 || action.local_frequency > params.max_cpu_frequency ||
      action.es_frequency < 0.0 || action.es_frequency > params.es_frequency_cap ||
      action.tx_bits < 0.0) {
    result.feasible = false;
    return result;
  }
  const auto& level = params.profile.levels[static_cast<std::size_t>(action.level)];
  const double tau = params.slot_duration;

  // Stage 1: arrivals join the device queue first, then the CPU serves whole
  // images from its start-of-slot content.
  const double local_in = queues.local_images + arrivals;
  double encoded_bits = 0.0;
  double encoded_images = 0.0;
  double classified_local = 0.0;
  if (action.offload) {
    const int cap = floor_capacity(action.local_frequency * tau / level.encode_cycles);
    const double n1 = std::min(local_in, static_cast<double>(cap));
    encoded_bits = n1 * level.bits_per_image;
    encoded_images = n1;
    result.next.local_images = local_in - n1;
    result.accuracy = level.accuracy;
  } else {
    const int cap = floor_capacity(action.local_frequency * tau / params.local_classify_cycles);
    const double n1 = std::min(local_in, static_cast<double>(cap));
    classified_local = n1;
    result.next.local_images = local_in - n1;
    result.accuracy = std::max(0.0, level.accuracy - params.profile.local_accuracy_penalty);
  }

  // Stage 2: uplink drains start-of-slot bits; freshly encoded bits land at
  // slot end. Images leave pro rata with their bits.
  const double sendable = std::min(queues.tx_bits, action.tx_bits);
  double tx_power = 0.0;
  if (sendable > 0.0) {
    if (gain <= 0.0) {
      result.feasible = false;
      return result;
    }
    tx_power = power_for_bits(sendable, gain, params.radio, tau);
    if (tx_power > params.max_transmit_power) {
      result.feasible = false;
      return result;
    }
  }
  const double images_out =
      queues.tx_bits > 0.0 ? queues.tx_images * (sendable / queues.tx_bits) : 0.0;
  result.next.tx_bits = queues.tx_bits - sendable + encoded_bits;
  result.next.tx_images = queues.tx_images - images_out + encoded_images;

  // Stage 3: the device's edge-server share classifies fluidly.
  const double es_capacity = action.es_frequency * tau / params.classify_cycles;
  const double n3 = std::min(queues.remote_images, es_capacity);
  result.next.remote_images = queues.remote_images - n3 + images_out;

  result.energy = cpu_energy(action.local_frequency, tau, params.cpu_energy_coefficient) +
                  tx_power * tau +
                  cpu_energy(action.es_frequency, tau, params.es_energy_coefficient);
  result.admitted = arrivals;
  result.classified = classified_local + n3;
  return result;
}

}  // namespace

SlotMetrics step_inference_slot(InferenceState& state, const InferenceAction& action,
                                std::span<const double> arrivals, std::span<const double> gains,
                                const InferenceParams& params) {
  assert(action.devices.size() == state.devices.size());
  assert(arrivals.size() == state.devices.size());
  assert(gains.size() == state.devices.size());

  SlotMetrics metrics;
  std::vector<DeviceSlotResult> results(state.devices.size());
  for (std::size_t k = 0; k < state.devices.size(); ++k) {
    results[k] = simulate_device_slot(state.devices[k], action.devices[k], arrivals[k], gains[k],
                                      params);
    if (!results[k].feasible) {
      throw InfeasibleAction("step_inference_slot: device " + std::to_string(k) +
                             " action violates a frequency or power cap");
    }
  }
  for (std::size_t k = 0; k < state.devices.size(); ++k) {
    state.devices[k] = results[k].next;
    metrics.energy += results[k].energy;
    metrics.accuracy += results[k].accuracy;
    metrics.admitted += results[k].admitted;
    metrics.classified += results[k].classified;
  }
  metrics.accuracy /= static_cast<double>(state.devices.size());
  state.admitted_total += metrics.admitted;
  state.classified_total += metrics.classified;
  state.slot += 1;
  return metrics;
}

double e2e_delay_estimate(double occupancy_images, double arrival_rate_images_per_s) {
  assert(occupancy_images >= 0.0);
  if (arrival_rate_images_per_s <= 0.0) return 0.0;
  return occupancy_images / arrival_rate_images_per_s;
}

double e2e_delay_estimate(const InferenceState& state, double arrival_rate_per_slot,
                          double slot_duration) {
  double occupancy = 0.0;
  for (const auto& queues : state.devices) occupancy += queues.occupancy();
  const double total_rate =
      static_cast<double>(state.devices.size()) * arrival_rate_per_slot / slot_duration;
  return e2e_delay_estimate(occupancy, total_rate);
}

InferenceGrids InferenceGrids::build(const InferenceParams& params, int frequency_levels,
                                     int tx_levels, double max_tx_bits) {
  if (frequency_levels < 2 || tx_levels < 2) {
    throw ConfigInvalid("inference grids need at least 2 levels per knob");
  }
  InferenceGrids grids;
  for (int i = 0; i < frequency_levels; ++i) {
    const double s = static_cast<double>(i) / (frequency_levels - 1);
    grids.local_frequencies.push_back(s * params.max_cpu_frequency);
    grids.es_frequencies.push_back(s * params.es_frequency_cap);
  }
  for (int i = 0; i < tx_levels; ++i) {
    grids.tx_bit_options.push_back(static_cast<double>(i) / (tx_levels - 1) * max_tx_bits);
  }
  return grids;
}

namespace {

// Stage components precomputed per device and slot so the candidate loop is
// pure arithmetic (the power curve is evaluated once per tx option, not once
// per combination).
struct Stage1Option {
  double n1 = 0.0;               // images served by the device CPU
  double encoded_images = 0.0;   // images moved into the tx queue (offload)
  double classified_local = 0.0; // images finished on-device (local path)
  double energy = 0.0;
  double accuracy = 0.0;
};

struct Stage2Option {
  double sendable = 0.0;
  double images_out = 0.0;
  double energy = 0.0;
  bool feasible = true;
};

struct Stage3Option {
  double n3 = 0.0;  // images classified at the edge server
  double energy = 0.0;
};

}  // namespace

InferenceAction solve_inference_slot(const InferenceState& state, const VirtualQueue& delay_queue,
                                     const VirtualQueue& accuracy_queue, TradeoffWeight v,
                                     const InferenceGrids& grids,
                                     std::span<const double> arrivals,
                                     std::span<const double> gains,
                                     const InferenceParams& params, double delay_bound,
                                     double accuracy_target) {
  const std::size_t device_count = state.devices.size();
  const double total_rate_s = params.arrival_rate / params.slot_duration *
                              static_cast<double>(device_count);  // images/s
  const double tau = params.slot_duration;
  const std::size_t level_count = params.profile.levels.size();
  const std::size_t f_count = grids.local_frequencies.size();
  const std::size_t tx_count = grids.tx_bit_options.size();
  const std::size_t es_count = grids.es_frequencies.size();

  InferenceAction chosen;
  chosen.devices.resize(device_count);

  std::vector<Stage1Option> stage1(level_count * 2 * f_count);
  std::vector<Stage2Option> stage2(tx_count);
  std::vector<Stage3Option> stage3(es_count);

  const std::size_t grid_size = level_count * 2 * f_count * tx_count * es_count;
  std::vector<SlotObjective> objectives;
  std::vector<std::size_t> flat_indices;
  objectives.reserve(grid_size);
  flat_indices.reserve(grid_size);

  for (std::size_t k = 0; k < device_count; ++k) {
    const DeviceQueues& q = state.devices[k];
    const double local_in = q.local_images + arrivals[k];

    for (std::size_t level = 0; level < level_count; ++level) {
      const auto& lv = params.profile.levels[level];
      for (int offload = 0; offload < 2; ++offload) {
        for (std::size_t fi = 0; fi < f_count; ++fi) {
          const double f = grids.local_frequencies[fi];
          Stage1Option opt;
          opt.energy = cpu_energy(f, tau, params.cpu_energy_coefficient);
          if (offload == 0) {  // offload path
            const int cap = floor_capacity(f * tau / lv.encode_cycles);
            opt.n1 = std::min(local_in, static_cast<double>(cap));
            opt.encoded_images = opt.n1;
            opt.accuracy = lv.accuracy;
          } else {  // local classification
            const int cap = floor_capacity(f * tau / params.local_classify_cycles);
            opt.n1 = std::min(local_in, static_cast<double>(cap));
            opt.classified_local = opt.n1;
            opt.accuracy = std::max(0.0, lv.accuracy - params.profile.local_accuracy_penalty);
          }
          stage1[(level * 2 + static_cast<std::size_t>(offload)) * f_count + fi] = opt;
        }
      }
    }

    for (std::size_t ti = 0; ti < tx_count; ++ti) {
      Stage2Option opt;
      opt.sendable = std::min(q.tx_bits, grids.tx_bit_options[ti]);
      if (opt.sendable > 0.0) {
        if (gains[k] <= 0.0) {
          opt.feasible = false;
        } else {
          const double p = power_for_bits(opt.sendable, gains[k], params.radio, tau);
          if (p > params.max_transmit_power) {
            opt.feasible = false;
          } else {
            opt.energy = p * tau;
            opt.images_out = q.tx_bits > 0.0 ? q.tx_images * (opt.sendable / q.tx_bits) : 0.0;
          }
        }
      }
      stage2[ti] = opt;
    }

    for (std::size_t ei = 0; ei < es_count; ++ei) {
      const double f_es = grids.es_frequencies[ei];
      Stage3Option opt;
      opt.n3 = std::min(q.remote_images, f_es * tau / params.classify_cycles);
      opt.energy = cpu_energy(f_es, tau, params.es_energy_coefficient);
      stage3[ei] = opt;
    }

    // Total occupancy only shrinks when an image is classified, so
    // occ' = local_in + tx_images + remote - n3 - classified_local.
    const double occupancy_base = local_in + q.tx_images + q.remote_images;
    const double inv_count = 1.0 / static_cast<double>(device_count);

    objectives.clear();
    flat_indices.clear();
    std::size_t index = 0;
    for (std::size_t level = 0; level < level_count; ++level) {
      for (int offload = 0; offload < 2; ++offload) {
        for (std::size_t fi = 0; fi < f_count; ++fi) {
          const Stage1Option& s1 = stage1[(level * 2 + static_cast<std::size_t>(offload)) * f_count + fi];
          for (std::size_t ti = 0; ti < tx_count; ++ti) {
            const Stage2Option& s2 = stage2[ti];
            for (std::size_t ei = 0; ei < es_count; ++ei, ++index) {
              if (!s2.feasible) continue;
              const Stage3Option& s3 = stage3[ei];

              SlotObjective objective;
              objective.cost = s1.energy + s2.energy + s3.energy;
              const double occupancy = occupancy_base - s3.n3 - s1.classified_local;
              // Per-device shares of the two global constraint gaps; summed
              // over devices they reconstruct (system delay - bound) and
              // (target - mean accuracy), so per-device argmins solve the
              // joint slot problem exactly.
              objective.add_term(delay_queue.value,
                                 occupancy / total_rate_s - delay_bound * inv_count);
              objective.add_term(accuracy_queue.value,
                                 (accuracy_target - s1.accuracy) * inv_count);
              // Backpressure drift of the three pipeline stages: backlog
              // times net change. Without these the solver cannot see the
              // value of moving images toward the server.
              objective.add_term(q.local_images, arrivals[k] - s1.n1);
              objective.add_term(q.tx_images, s1.encoded_images - s2.images_out);
              objective.add_term(q.remote_images, s2.images_out - s3.n3);

              objectives.push_back(objective);
              flat_indices.push_back(index);
            }
          }
        }
      }
    }
    const std::size_t best = solve_slot_exhaustive_index(
        objectives.size(), [&](std::size_t i) { return objectives[i]; }, v);

    // Decode the flat index back into grid choices.
    std::size_t rem = flat_indices[best];
    const std::size_t ei = rem % es_count;
    rem /= es_count;
    const std::size_t ti = rem % tx_count;
    rem /= tx_count;
    const std::size_t fi = rem % f_count;
    rem /= f_count;
    const std::size_t offload = rem % 2;
    const std::size_t level = rem / 2;

    DeviceAction action;
    action.level = static_cast<int>(level);
    action.offload = offload == 0;
    action.local_frequency = grids.local_frequencies[fi];
    action.tx_bits = grids.tx_bit_options[ti];
    action.es_frequency = grids.es_frequencies[ei];
    chosen.devices[k] = action;
  }
  return chosen;
}

}  // namespace goiot::inference
