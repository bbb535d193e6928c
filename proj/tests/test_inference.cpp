#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "goiot/errors.hpp"
#include "goiot/inference.hpp"
#include "goiot/model.hpp"
#include "goiot/opt.hpp"

using namespace goiot;
using namespace goiot::inference;

namespace {

CompressionProfile go_profile() {
  CompressionProfile profile;
  profile.family = "go";
  profile.levels = {{2000.0, 2e6, 0.92},
                    {4000.0, 4e6, 0.95},
                    {8000.0, 8e6, 0.97},
                    {16000.0, 1.6e7, 0.98}};
  return profile;
}

InferenceParams make_params(std::size_t devices) {
  InferenceParams params;
  params.profile = go_profile();
  (void)devices;
  return params;
}

// Enough for exactly one image per slot at level 0: encode at 2e8 cycles/s,
// classify at the full per-device ES share.
DeviceAction ample_action() {
  DeviceAction action;
  action.level = 0;
  action.offload = true;
  action.tx_bits = 2000.0;
  action.local_frequency = 2e8;
  action.es_frequency = 2.5e9;
  return action;
}

}  // namespace

TEST_CASE("profile validation enforces level ordering") {
  CHECK_NOTHROW(go_profile().validate());

  CompressionProfile few = go_profile();
  few.levels.resize(1);
  CHECK_THROWS_AS(few.validate(), ConfigInvalid);

  CompressionProfile unsorted = go_profile();
  std::swap(unsorted.levels[1], unsorted.levels[2]);  // bits no longer increase
  CHECK_THROWS_AS(unsorted.validate(), ConfigInvalid);

  CompressionProfile dropping = go_profile();
  dropping.levels[3].accuracy = 0.9;  // below level 2
  CHECK_THROWS_AS(dropping.validate(), ConfigInvalid);
}

TEST_CASE("an offloaded image crosses the pipeline in three slots") {
  InferenceParams params = make_params(1);
  InferenceState state;
  state.devices.resize(1);
  InferenceAction action;
  action.devices = {ample_action()};
  const std::vector<double> gains{1e-3};

  std::vector<double> classified_by_slot;
  for (int t = 0; t < 5; ++t) {
    const std::vector<double> arrivals{t == 0 ? 1.0 : 0.0};
    const SlotMetrics metrics = step_inference_slot(state, action, arrivals, gains, params);
    classified_by_slot.push_back(metrics.classified);
    CHECK(metrics.accuracy == doctest::Approx(0.92));
  }
  CHECK(classified_by_slot == std::vector<double>{0.0, 0.0, 1.0, 0.0, 0.0});
  CHECK(state.admitted_total == doctest::Approx(1.0));
  CHECK(state.classified_total == doctest::Approx(1.0));
  CHECK(state.devices[0].occupancy() == doctest::Approx(0.0));
}

TEST_CASE("local classification completes within the arrival slot") {
  InferenceParams params = make_params(1);
  InferenceState state;
  state.devices.resize(1);
  DeviceAction local = ample_action();
  local.offload = false;
  local.local_frequency = 1e9;  // one image at 1e7 cycles each
  local.tx_bits = 0.0;
  local.es_frequency = 0.0;
  InferenceAction action;
  action.devices = {local};

  const SlotMetrics metrics =
      step_inference_slot(state, action, std::vector<double>{1.0}, std::vector<double>{1e-3},
                          params);
  CHECK(metrics.classified == doctest::Approx(1.0));
  CHECK(metrics.accuracy == doctest::Approx(0.92 - params.profile.local_accuracy_penalty));
  CHECK(state.devices[0].occupancy() == doctest::Approx(0.0));
}

TEST_CASE("images are conserved across a long run") {
  InferenceParams params = make_params(3);
  InferenceState state;
  state.devices.resize(3);
  InferenceAction action;
  action.devices = {ample_action(), ample_action(), ample_action()};
  const std::vector<double> gains{1e-3, 2e-3, 5e-4};

  for (int t = 0; t < 200; ++t) {
    std::vector<double> arrivals(3, 0.0);
    arrivals[static_cast<std::size_t>(t % 3)] = 1.0;
    step_inference_slot(state, action, arrivals, gains, params);
    double occupancy = 0.0;
    for (const auto& queues : state.devices) {
      CHECK(queues.local_images >= 0.0);
      CHECK(queues.tx_bits >= 0.0);
      CHECK(queues.tx_images >= 0.0);
      CHECK(queues.remote_images >= 0.0);
      occupancy += queues.occupancy();
    }
    CHECK(state.admitted_total - state.classified_total == doctest::Approx(occupancy));
  }
  CHECK(state.admitted_total == doctest::Approx(200.0));
}

TEST_CASE("a paced deterministic stream sees a fixed three-slot sojourn") {
  InferenceParams params = make_params(1);
  InferenceState state;
  state.devices.resize(1);
  InferenceAction action;
  action.devices = {ample_action()};
  const std::vector<double> gains{1e-3};

  for (int t = 0; t < 40; ++t) {
    const std::vector<double> arrivals{t % 2 == 0 ? 1.0 : 0.0};
    const SlotMetrics metrics = step_inference_slot(state, action, arrivals, gains, params);
    const bool arrived_two_back = (t - 2) >= 0 && (t - 2) % 2 == 0;
    CHECK(metrics.classified == doctest::Approx(arrived_two_back ? 1.0 : 0.0));
  }
}

TEST_CASE("delay estimate follows little's law") {
  CHECK(e2e_delay_estimate(12.0, 300.0) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(e2e_delay_estimate(0.0, 300.0) == doctest::Approx(0.0));

  InferenceState state;
  state.devices.resize(2);
  state.devices[0].local_images = 1.0;
  state.devices[1].remote_images = 2.0;
  // 0.6 images per slot per device over two devices at 10 ms slots
  CHECK(e2e_delay_estimate(state, 0.6, 0.01) == doctest::Approx(3.0 / 120.0).epsilon(1e-12));
}

TEST_CASE("cap violations are rejected per device") {
  InferenceParams params = make_params(1);
  InferenceState state;
  state.devices.resize(1);
  const std::vector<double> arrivals{0.0};
  const std::vector<double> gains{1e-3};

  InferenceAction fast;
  fast.devices = {ample_action()};
  fast.devices[0].local_frequency = params.max_cpu_frequency * 1.01;
  CHECK_THROWS_AS(step_inference_slot(state, fast, arrivals, gains, params), InfeasibleAction);

  InferenceAction greedy_es;
  greedy_es.devices = {ample_action()};
  greedy_es.devices[0].es_frequency = params.es_frequency_cap * 1.01;
  CHECK_THROWS_AS(step_inference_slot(state, greedy_es, arrivals, gains, params),
                  InfeasibleAction);

  InferenceAction negative;
  negative.devices = {ample_action()};
  negative.devices[0].tx_bits = -1.0;
  CHECK_THROWS_AS(step_inference_slot(state, negative, arrivals, gains, params),
                  InfeasibleAction);

  // queued bits, dead channel: transmitting is impossible at any power
  InferenceState loaded;
  loaded.devices.resize(1);
  loaded.devices[0].tx_bits = 2000.0;
  loaded.devices[0].tx_images = 1.0;
  InferenceAction send;
  send.devices = {ample_action()};
  CHECK_THROWS_AS(
      step_inference_slot(loaded, send, arrivals, std::vector<double>{0.0}, params),
      InfeasibleAction);

  // power needed for 28 kbit in one slot at a microscopic gain exceeds the cap
  InferenceState heavy;
  heavy.devices.resize(1);
  heavy.devices[0].tx_bits = 28000.0;
  heavy.devices[0].tx_images = 1.0;
  InferenceAction blast;
  blast.devices = {ample_action()};
  blast.devices[0].tx_bits = 28000.0;
  CHECK_THROWS_AS(
      step_inference_slot(heavy, blast, arrivals, std::vector<double>{1e-9}, params),
      InfeasibleAction);
}

TEST_CASE("slot solver is deterministic and respects limiting regimes") {
  InferenceParams params = make_params(2);
  const InferenceGrids grids = InferenceGrids::build(params, 8, 8, 28000.0);
  CHECK(grids.local_frequencies.front() == 0.0);
  CHECK(grids.tx_bit_options.front() == 0.0);
  CHECK(grids.es_frequencies.front() == 0.0);
  CHECK(grids.local_frequencies.back() == doctest::Approx(params.max_cpu_frequency));
  CHECK(grids.es_frequencies.back() == doctest::Approx(params.es_frequency_cap));

  InferenceState state;
  state.devices.resize(2);
  const std::vector<double> arrivals{1.0, 1.0};
  const std::vector<double> gains{1e-3, 2e-3};

  // Satisfied constraints and a huge V: nothing is worth spending energy on.
  VirtualQueue delay_queue{"delay", 0.0, 0.2, ConstraintDirection::kStayBelow};
  VirtualQueue accuracy_queue{"accuracy", 0.0, 0.95, ConstraintDirection::kExceed};
  const InferenceAction idle =
      solve_inference_slot(state, delay_queue, accuracy_queue, TradeoffWeight{1e12}, grids,
                           arrivals, gains, params, 0.2, 0.95);
  InferenceState scratch = state;
  const SlotMetrics idle_metrics =
      step_inference_slot(scratch, idle, arrivals, gains, params);
  CHECK(idle_metrics.energy == doctest::Approx(0.0));

  // Starved accuracy queue: every device picks the most accurate level.
  VirtualQueue starved{"accuracy", 1e9, 0.95, ConstraintDirection::kExceed};
  const InferenceAction accurate =
      solve_inference_slot(state, delay_queue, starved, TradeoffWeight{1.0}, grids, arrivals,
                           gains, params, 0.2, 0.95);
  for (const auto& device : accurate.devices) {
    CHECK(device.level == 3);
  }

  // Loaded local queues and a pressing delay constraint: the solver starts
  // the pipeline moving.
  InferenceState backlog;
  backlog.devices.resize(2);
  backlog.devices[0].local_images = 50.0;
  backlog.devices[1].local_images = 50.0;
  VirtualQueue pressing{"delay", 1e6, 0.2, ConstraintDirection::kStayBelow};
  const InferenceAction moving =
      solve_inference_slot(backlog, pressing, accuracy_queue, TradeoffWeight{1.0}, grids,
                           arrivals, gains, params, 0.2, 0.95);
  CHECK(moving.devices[0].local_frequency > 0.0);
  CHECK(moving.devices[1].local_frequency > 0.0);

  // determinism: identical inputs give identical actions
  const InferenceAction repeat =
      solve_inference_slot(backlog, pressing, accuracy_queue, TradeoffWeight{1.0}, grids,
                           arrivals, gains, params, 0.2, 0.95);
  REQUIRE(repeat.devices.size() == moving.devices.size());
  for (std::size_t k = 0; k < repeat.devices.size(); ++k) {
    CHECK(repeat.devices[k].level == moving.devices[k].level);
    CHECK(repeat.devices[k].offload == moving.devices[k].offload);
    CHECK(repeat.devices[k].tx_bits == moving.devices[k].tx_bits);
    CHECK(repeat.devices[k].local_frequency == moving.devices[k].local_frequency);
    CHECK(repeat.devices[k].es_frequency == moving.devices[k].es_frequency);
  }
}
