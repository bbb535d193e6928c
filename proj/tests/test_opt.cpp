#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "goiot/errors.hpp"
#include "goiot/opt.hpp"
#include "goiot/rng.hpp"

using namespace goiot;

TEST_CASE("virtual queue updates follow the drift recursions") {
  VirtualQueue below{"d", 2.0, 5.0, ConstraintDirection::kStayBelow};
  CHECK(update_virtual_queue(below, 9.0).value == doctest::Approx(6.0));
  CHECK(update_virtual_queue(below, 1.0).value == 0.0);

  VirtualQueue above{"a", 1.0, 0.8, ConstraintDirection::kExceed};
  CHECK(update_virtual_queue(above, 0.5).value == doctest::Approx(1.3));
  CHECK(update_virtual_queue(above, 2.0).value == 0.0);
}

TEST_CASE("queue trajectories match an independent recursion") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    RandomStream stream(909, s);
    const bool exceed = stream.uniform01() < 0.5;
    VirtualQueue q{"q", stream.uniform(0.0, 4.0), stream.uniform(-1.0, 3.0),
                   exceed ? ConstraintDirection::kExceed : ConstraintDirection::kStayBelow};
    double shadow = q.value;
    for (int t = 0; t < 300; ++t) {
      const double metric = stream.uniform(-2.0, 5.0);
      q = update_virtual_queue(q, metric);
      const double drift = exceed ? q.target - metric : metric - q.target;
      shadow = std::max(0.0, shadow + drift);
      CHECK(q.value == shadow);
      CHECK(q.value >= 0.0);
    }
  }
}

TEST_CASE("queues drain to zero under satisfied constraints") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    RandomStream stream(411, s);
    VirtualQueue q{"q", stream.uniform(0.0, 10.0), stream.uniform(0.0, 2.0),
                   ConstraintDirection::kStayBelow};
    const double margin = stream.uniform(0.1, 1.0);
    bool reached_zero = false;
    for (int t = 0; t < 200; ++t) {
      q = update_virtual_queue(q, q.target - margin);
      CHECK(q.value >= 0.0);
      if (q.value == 0.0) reached_zero = true;
      if (reached_zero) CHECK(q.value == 0.0);  // stays drained
    }
    CHECK(reached_zero);
  }
}

TEST_CASE("drift plus penalty arithmetic") {
  SlotObjective objective;
  objective.cost = 3.0;
  objective.add_term(4.0, 0.5);
  objective.add_term(1.0, -2.0);
  CHECK(drift_plus_penalty(TradeoffWeight{2.0}, objective) == doctest::Approx(6.0));
  CHECK(drift_plus_penalty(TradeoffWeight{0.0}, objective) == doctest::Approx(0.0));
}

TEST_CASE("argmin is deterministic and breaks ties to the lowest index") {
  std::vector<SlotObjective> objectives(4);
  objectives[0].cost = 3.0;
  objectives[1].cost = 1.0;
  objectives[2].cost = 1.0;  // exact tie with index 1
  objectives[3].cost = 2.0;
  const auto eval = [&](std::size_t i) { return objectives[i]; };
  CHECK(solve_slot_exhaustive_index(objectives.size(), eval, TradeoffWeight{1.0}) == 1);
  CHECK(solve_slot_exhaustive_index(objectives.size(), eval, TradeoffWeight{1.0}) == 1);

  // all equal: first candidate wins
  std::vector<SlotObjective> flat(7);
  CHECK(solve_slot_exhaustive_index(flat.size(), [&](std::size_t i) { return flat[i]; },
                                    TradeoffWeight{5.0}) == 0);

  CHECK_THROWS_AS(
      solve_slot_exhaustive_index(0, [&](std::size_t i) { return flat[i]; }, TradeoffWeight{1.0}),
      EmptyActionSpace);
}

TEST_CASE("argmin is invariant under uniform positive scaling") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    RandomStream stream(5150, s);
    const std::size_t n = 2 + static_cast<std::size_t>(stream.uniform(0.0, 10.99));
    std::vector<SlotObjective> objectives(n);
    for (auto& objective : objectives) {
      objective.cost = stream.uniform(0.0, 5.0);
      const int terms = 1 + static_cast<int>(stream.uniform(0.0, 2.99));
      for (int t = 0; t < terms; ++t) {
        objective.add_term(stream.uniform(0.0, 10.0), stream.uniform(-2.0, 2.0));
      }
    }
    const double v = stream.uniform(0.0, 4.0);
    const auto eval = [&](std::size_t i) { return objectives[i]; };
    const std::size_t base = solve_slot_exhaustive_index(n, eval, TradeoffWeight{v});
    for (double c : {1e-3, 0.37, 42.0}) {
      const auto scaled = [&](std::size_t i) {
        SlotObjective copy = objectives[i];
        for (std::size_t t = 0; t < copy.term_count; ++t) copy.terms[t].first *= c;
        return copy;
      };
      CHECK(solve_slot_exhaustive_index(n, scaled, TradeoffWeight{v * c}) == base);
    }
  }
}

TEST_CASE("mean rate stability separates bounded from growing traces") {
  std::vector<double> bounded(1000);
  RandomStream stream(33, 0);
  for (auto& x : bounded) x = 5.0 + stream.uniform(-0.5, 0.5);
  const auto verdict = mean_rate_stability(bounded);
  CHECK(verdict.stable);
  CHECK(std::abs(verdict.slope) < 0.01);

  std::vector<double> growing(1000);
  for (std::size_t t = 0; t < growing.size(); ++t) growing[t] = 0.5 * static_cast<double>(t);
  const auto bad = mean_rate_stability(growing);
  CHECK_FALSE(bad.stable);
  CHECK(bad.slope == doctest::Approx(0.5).epsilon(1e-9));

  // exact line: least squares over the last half recovers the slope exactly
  std::vector<double> line(600);
  for (std::size_t t = 0; t < line.size(); ++t) line[t] = 2.0 + 0.125 * static_cast<double>(t);
  CHECK(mean_rate_stability(line).slope == doctest::Approx(0.125).epsilon(1e-9));

  std::vector<double> tiny(99, 1.0);
  CHECK_THROWS_AS(mean_rate_stability(tiny), TraceTooShort);
  std::vector<double> just(100, 0.0);
  CHECK(mean_rate_stability(just).stable);
}

TEST_CASE("queue sets track updates and traces") {
  VirtualQueueSet set;
  const std::size_t d = set.add({"delay", 0.0, 1.0, ConstraintDirection::kStayBelow});
  const std::size_t a = set.add({"acc", 0.0, 0.8, ConstraintDirection::kExceed});
  CHECK(set.size() == 2);

  set.apply(d, 1.5);  // 0 + 1.5 - 1.0
  set.apply(d, 0.2);  // 0.5 + 0.2 - 1.0 clamps to 0
  set.apply(a, 0.6);
  CHECK(set.trace(d).size() == 2);
  CHECK(set.trace(d)[0] == doctest::Approx(0.5));
  CHECK(set.trace(d)[1] == doctest::Approx(0.0));
  CHECK(set.at(d).value == doctest::Approx(0.0));
  CHECK(set.at(a).value == doctest::Approx(0.2));

  set.mutable_at(a).target = 0.9;
  set.apply(a, 0.6);
  CHECK(set.at(a).value == doctest::Approx(0.5));
}
