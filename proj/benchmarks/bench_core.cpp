#include <benchmark/benchmark.h>

#include <cmath>
#include <utility>
#include <vector>

#include "goiot/fl.hpp"
#include "goiot/inference.hpp"
#include "goiot/model.hpp"
#include "goiot/opt.hpp"
#include "goiot/rng.hpp"
#include "goiot/sensing.hpp"

using namespace goiot;

namespace {

std::vector<std::pair<double, double>> device_positions(int count, std::uint64_t seed) {
  RandomStream stream(seed, 0);
  std::vector<std::pair<double, double>> positions(static_cast<std::size_t>(count));
  for (auto& p : positions) {
    p = {stream.uniform(0.0, 10.0), stream.uniform(0.0, 10.0)};
  }
  return positions;
}

std::vector<double> channel_gains(const std::vector<std::pair<double, double>>& positions,
                                  const RadioConfig& radio, std::uint64_t seed) {
  RandomStream stream(seed, 1);
  std::vector<double> gains(positions.size());
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const double distance =
        std::hypot(positions[k].first - 5.0, positions[k].second - 5.0);
    gains[k] = pathloss_rayleigh_gain(distance, radio, stream.exponential1());
  }
  return gains;
}

// The production setup: 30 devices, 5 coefficients, one channel realization.
sensing::SensingInstance sensing_instance() {
  const auto positions = device_positions(30, 42);
  sensing::SensingInstance instance;
  instance.observation.basis = sensing::build_fourier_basis(positions, 5, 10.0);
  instance.effectiveness.target = 0.3;
  instance.gains = channel_gains(positions, instance.radio, 42);
  instance.max_transmit_power.assign(30, 0.25);
  return instance;
}

}  // namespace

static void BM_FourierBasis(benchmark::State& state) {
  const auto positions = device_positions(30, 42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensing::build_fourier_basis(positions, 5, 10.0));
  }
}
BENCHMARK(BM_FourierBasis);

static void BM_EstimationMse(benchmark::State& state) {
  const sensing::SensingInstance instance = sensing_instance();
  const std::vector<int> bits(30, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensing::action_mse(instance, bits));
  }
}
BENCHMARK(BM_EstimationMse);

static void BM_SensingAllocation(benchmark::State& state) {
  const sensing::SensingInstance instance = sensing_instance();
  for (auto _ : state) {
    benchmark::DoNotOptimize(sensing::allocate_bits_power(instance).total_power());
  }
}
BENCHMARK(BM_SensingAllocation);

static void BM_InferenceSlotSolve(benchmark::State& state) {
  inference::InferenceParams params;
  params.profile.family = "go";
  params.profile.levels = {{2000.0, 2e6, 0.92},
                           {4000.0, 4e6, 0.95},
                           {8000.0, 8e6, 0.97},
                           {16000.0, 1.6e7, 0.98}};
  params.profile.validate();
  params.radio.bandwidth_per_device = 1e6;
  const inference::InferenceGrids grids =
      inference::InferenceGrids::build(params, 8, 8, 28000.0);

  inference::InferenceState pipeline;
  pipeline.devices.resize(5);
  for (auto& queues : pipeline.devices) {
    queues.local_images = 2.0;
    queues.remote_images = 1.0;
  }
  const VirtualQueue delay_queue{"delay", 0.7, 0.2, ConstraintDirection::kStayBelow};
  const VirtualQueue accuracy_queue{"accuracy", 0.4, 0.95, ConstraintDirection::kExceed};
  const std::vector<double> arrivals(5, 1.0);
  const auto positions = device_positions(5, 7);
  const std::vector<double> gains = channel_gains(positions, params.radio, 7);

  for (auto _ : state) {
    benchmark::DoNotOptimize(
        inference::solve_inference_slot(pipeline, delay_queue, accuracy_queue,
                                        TradeoffWeight{10.0}, grids, arrivals, gains,
                                        params, 0.2, 0.95));
  }
}
BENCHMARK(BM_InferenceSlotSolve);

static void BM_FlSlotSolve(benchmark::State& state) {
  fl::FLParams params;
  params.devices.resize(10);
  params.radio.bandwidth_per_device = 1e6;
  const fl::FLGrids grids = fl::FLGrids::build(params);

  fl::FLState training;
  training.accuracy = 0.55;
  const VirtualQueue latency_queue{"latency", 0.3, 0.2, ConstraintDirection::kStayBelow};
  const VirtualQueue accuracy_queue{"accuracy", 2.0, 0.7, ConstraintDirection::kExceed};
  const auto positions = device_positions(10, 11);
  const std::vector<double> gains = channel_gains(positions, params.radio, 11);

  for (auto _ : state) {
    benchmark::DoNotOptimize(fl::solve_fl_slot(training, latency_queue, accuracy_queue,
                                               TradeoffWeight{0.1}, grids, gains,
                                               params));
  }
}
BENCHMARK(BM_FlSlotSolve);

static void BM_QueueUpdate(benchmark::State& state) {
  VirtualQueue queue{"m", 1.0, 0.5, ConstraintDirection::kStayBelow};
  double metric = 0.3;
  for (auto _ : state) {
    queue = update_virtual_queue(queue, metric);
    metric = 0.8 - metric;  // alternate fill and drain
    benchmark::DoNotOptimize(queue.value);
  }
}
BENCHMARK(BM_QueueUpdate);

BENCHMARK_MAIN();
