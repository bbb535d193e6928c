#pragma once

#include <cstddef>
#include <vector>

#include "goiot/model.hpp"
#include "goiot/opt.hpp"

namespace goiot::fl {

// Piecewise-constant accuracy requirement: `before` until the step
// iteration, `after` from then on.
struct TargetSchedule {
  double before = 0.7;
  double after = 0.8;
  long step_iteration = 450;

  double target_at(long iteration) const {
    return iteration < step_iteration ? before : after;
  }
};

// Surrogate for the training process: accuracy relaxes geometrically toward
// a ceiling set by quantization coarseness and participation breadth.
struct LearningCurveModel {
  double a_max = 0.95;
  double eta = 0.03;
  double quantization_penalty = 0.15;
  double participation_penalty = 0.25;
  double noise_sd = 0.005;
};

struct FLState {
  double accuracy = 0.3;
  long iteration = 0;
  TargetSchedule schedule;
};

// One training iteration's knobs. `selection` holds device indices; `bits`
// and `local_frequencies` align with it entry for entry. An empty selection
// skips the iteration entirely.
struct FLAction {
  std::vector<std::size_t> selection;
  std::vector<int> bits;
  std::vector<double> local_frequencies;
  int batch = 0;
  double es_frequency = 0.0;
};

struct FLParams {
  std::vector<DeviceProfile> devices;
  RadioConfig radio;
  double model_size_bits = 1e6;
  double cycles_per_sample = 5e5;
  int batch = 32;
  double aggregation_cycles = 2e8;
  double es_frequency_cap = 1e10;
  double es_energy_coefficient = 1e-29;
  double transmit_power = 0.1;
  double iteration_period = 0.2;
  double latency_bound = 0.2;
  LearningCurveModel curve;

  std::size_t device_count() const { return devices.size(); }
};

// Accuracy ceiling of a non-empty configuration: a_max minus the
// quantization and partial-participation penalties.
double accuracy_ceiling(const FLAction& action, const LearningCurveModel& curve,
                        std::size_t device_count);

// Wall time of one iteration: the slowest selected device's compute plus
// upload, then aggregation at the server. A selected device with a dead
// channel yields +inf. Throws EmptySelection for an empty action.
double iteration_latency(const FLAction& action, const std::vector<double>& gains,
                         const FLParams& params);

// Average electrical power over the iteration period: device CPUs clocked
// for the whole period, transmit energy for the actual upload time, server
// CPU for the whole period. An empty selection draws nothing.
double iteration_power(const FLAction& action, const std::vector<double>& gains,
                       const FLParams& params);

// Advance the surrogate curve by one iteration. An empty selection leaves
// accuracy untouched and ignores the noise draw.
FLState surrogate_accuracy_step(const FLState& state, const FLAction& action,
                                const LearningCurveModel& curve, double noise_draw,
                                std::size_t device_count);

// Value the accuracy queue sees for a candidate: the ceiling the chosen
// configuration trains toward, or the unchanged current accuracy when
// skipping. Using the ceiling rather than the one-step prediction keeps the
// queue from winding up during the climb and overshooting the target.
double predicted_accuracy_metric(const FLState& state, const FLAction& action,
                                 const LearningCurveModel& curve,
                                 std::size_t device_count);

struct FLGrids {
  std::vector<int> bit_options;
  std::vector<double> local_frequencies;
  std::vector<double> es_frequencies;

  static FLGrids build(const FLParams& params, std::size_t frequency_levels = 4);
};

// Drift-plus-penalty argmin over the structured candidate set: the empty
// action plus top-g channel-ranked selections for g = 1..K, crossed with the
// bit and frequency grids. Candidates with infinite latency are dropped; the
// empty action keeps the set non-empty.
FLAction solve_fl_slot(const FLState& state, const VirtualQueue& latency_queue,
                       const VirtualQueue& accuracy_queue, TradeoffWeight v,
                       const FLGrids& grids, const std::vector<double>& gains,
                       const FLParams& params);

}  // namespace goiot::fl
