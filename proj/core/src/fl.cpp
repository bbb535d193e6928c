#include "goiot/fl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "goiot/errors.hpp"

namespace goiot::fl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upload time for one model update; +inf when the link carries nothing.
double upload_time(double payload_bits, double rate_bits_per_s) {
  if (payload_bits <= 0.0) return 0.0;
  if (rate_bits_per_s <= 0.0) return kInf;
  return payload_bits / rate_bits_per_s;
}

}  // namespace

double accuracy_ceiling(const FLAction& action, const LearningCurveModel& curve,
                        std::size_t device_count) {
  const std::size_t g = action.selection.size();
  if (g == 0 || device_count == 0) return 0.0;
  double mean_quant = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    mean_quant += std::exp2(-static_cast<double>(action.bits[i]));
  }
  mean_quant /= static_cast<double>(g);
  const double participation =
      1.0 - static_cast<double>(g) / static_cast<double>(device_count);
  return curve.a_max - curve.quantization_penalty * mean_quant -
         curve.participation_penalty * participation;
}

double iteration_latency(const FLAction& action, const std::vector<double>& gains,
                         const FLParams& params) {
  if (action.selection.empty()) {
    throw EmptySelection("iteration_latency: no devices selected");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < action.selection.size(); ++i) {
    const std::size_t id = action.selection[i];
    const double f = action.local_frequencies[i];
    const double compute_cycles =
        static_cast<double>(action.batch) * params.cycles_per_sample;
    const double compute_time = f > 0.0 ? compute_cycles / f : kInf;
    const double payload =
        params.model_size_bits * static_cast<double>(action.bits[i]) / 32.0;
    const double rate =
        bits_for_power(params.transmit_power, gains[id], params.radio, 1.0);
    worst = std::max(worst, compute_time + upload_time(payload, rate));
  }
  double aggregation = 0.0;
  if (params.aggregation_cycles > 0.0) {
    aggregation = action.es_frequency > 0.0
                      ? params.aggregation_cycles / action.es_frequency
                      : kInf;
  }
  return worst + aggregation;
}

double iteration_power(const FLAction& action, const std::vector<double>& gains,
                       const FLParams& params) {
  if (action.selection.empty()) return 0.0;
  const double period = params.iteration_period;
  double energy = 0.0;
  for (std::size_t i = 0; i < action.selection.size(); ++i) {
    const std::size_t id = action.selection[i];
    const DeviceProfile& device = params.devices[id];
    energy += cpu_energy(action.local_frequencies[i], period,
                         device.cpu_energy_coefficient);
    const double payload =
        params.model_size_bits * static_cast<double>(action.bits[i]) / 32.0;
    const double rate =
        bits_for_power(params.transmit_power, gains[id], params.radio, 1.0);
    energy += params.transmit_power * upload_time(payload, rate);
  }
  energy += cpu_energy(action.es_frequency, period, params.es_energy_coefficient);
  return energy / period;
}

FLState surrogate_accuracy_step(const FLState& state, const FLAction& action,
                                const LearningCurveModel& curve,
                                double noise_draw, std::size_t device_count) {
  FLState next = state;
  next.iteration = state.iteration + 1;
  if (action.selection.empty()) return next;
  const double ceiling = accuracy_ceiling(action, curve, device_count);
  const double raw = state.accuracy + curve.eta * (ceiling - state.accuracy) +
                     curve.noise_sd * noise_draw;
  next.accuracy = std::clamp(raw, 0.0, curve.a_max);
  return next;
}

double predicted_accuracy_metric(const FLState& state, const FLAction& action,
                                 const LearningCurveModel& curve,
                                 std::size_t device_count) {
  if (action.selection.empty()) return state.accuracy;
  return accuracy_ceiling(action, curve, device_count);
}

FLGrids FLGrids::build(const FLParams& params, std::size_t frequency_levels) {
  FLGrids grids;
  grids.bit_options = {2, 4, 8, 16, 32};
  double device_cap = kInf;
  for (const DeviceProfile& device : params.devices) {
    device_cap = std::min(device_cap, device.max_cpu_frequency);
  }
  for (std::size_t j = 1; j <= frequency_levels; ++j) {
    const double fraction =
        static_cast<double>(j) / static_cast<double>(frequency_levels);
    grids.local_frequencies.push_back(fraction * device_cap);
    grids.es_frequencies.push_back(fraction * params.es_frequency_cap);
  }
  return grids;
}

FLAction solve_fl_slot(const FLState& state, const VirtualQueue& latency_queue,
                       const VirtualQueue& accuracy_queue, TradeoffWeight v,
                       const FLGrids& grids, const std::vector<double>& gains,
                       const FLParams& params) {
  const std::size_t device_count = params.device_count();
  const double target = state.schedule.target_at(state.iteration);

  // Devices ranked by channel quality; top-g prefixes form the selections,
  // so poorly connected stragglers are the first to be dropped.
  std::vector<std::size_t> ranking(device_count);
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

  std::vector<FLAction> actions;
  std::vector<SlotObjective> objectives;

  auto add_candidate = [&](FLAction action) {
    SlotObjective objective;
    double latency = 0.0;
    double power = 0.0;
    if (!action.selection.empty()) {
      latency = iteration_latency(action, gains, params);
      if (!std::isfinite(latency)) return;
      power = iteration_power(action, gains, params);
    }
    objective.cost = power;
    objective.add_term(latency_queue.value, latency - params.latency_bound);
    const double metric =
        predicted_accuracy_metric(state, action, params.curve, device_count);
    objective.add_term(accuracy_queue.value, target - metric);
    objectives.push_back(objective);
    actions.push_back(std::move(action));
  };

  FLAction skip;
  skip.batch = params.batch;
  add_candidate(skip);

  for (std::size_t g = 1; g <= device_count; ++g) {
    std::vector<std::size_t> selection(ranking.begin(),
                                       ranking.begin() + static_cast<long>(g));
    std::sort(selection.begin(), selection.end());
    for (int bits : grids.bit_options) {
      for (double f : grids.local_frequencies) {
        for (double es : grids.es_frequencies) {
          FLAction action;
          action.selection = selection;
          action.bits.assign(g, bits);
          action.local_frequencies.assign(g, f);
          action.batch = params.batch;
          action.es_frequency = es;
          add_candidate(std::move(action));
        }
      }
    }
  }

  const std::size_t best = solve_slot_exhaustive_index(
      objectives.size(), [&](std::size_t i) { return objectives[i]; }, v);
  return actions[best];
}

}  // namespace goiot::fl
