#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "goiot/errors.hpp"

namespace goiot {

enum class ConstraintDirection {
  kStayBelow,  // long-run average must stay below target
  kExceed,     // long-run average must exceed target
};

// One nonnegative scalar queue per long-term constraint.
struct VirtualQueue {
  std::string name;
  double value = 0.0;  // >= 0
  double target = 0.0;
  ConstraintDirection direction = ConstraintDirection::kStayBelow;
};

// Lyapunov update: the queue absorbs this slot's constraint violation and
// drains while the constraint holds, never below zero.
VirtualQueue update_virtual_queue(const VirtualQueue& queue, double measured_metric);

struct TradeoffWeight {
  double value = 0.0;  // V >= 0; larger favors cost over constraint drift
};

// Per-action evaluation result: instantaneous cost plus one (queue value, gap)
// pair per long-term constraint, gap signed so positive means violating.
struct SlotObjective {
  static constexpr std::size_t kMaxTerms = 8;

  double cost = 0.0;
  std::array<std::pair<double, double>, kMaxTerms> terms{};
  std::size_t term_count = 0;

  void add_term(double queue_value, double gap) {
    if (term_count >= kMaxTerms) throw Error("SlotObjective: too many constraint terms");
    terms[term_count++] = {queue_value, gap};
  }
};

// V * cost + sum_i queue_i * gap_i
double drift_plus_penalty(TradeoffWeight v, const SlotObjective& objective);

// Exhaustive per-slot argmin. Ties break toward the lowest enumeration index;
// the strict comparison below is what guarantees that.
template <typename Evaluator>
std::size_t solve_slot_exhaustive_index(std::size_t action_count, Evaluator&& evaluate,
                                        TradeoffWeight v) {
  if (action_count == 0) throw EmptyActionSpace("solve_slot_exhaustive: no candidate actions");
  std::size_t best = 0;
  double best_value = drift_plus_penalty(v, evaluate(std::size_t{0}));
  for (std::size_t i = 1; i < action_count; ++i) {
    const double value = drift_plus_penalty(v, evaluate(i));
    if (value < best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

template <typename Action, typename Evaluator>
const Action& solve_slot_exhaustive(std::span<const Action> actions, Evaluator&& evaluate,
                                    TradeoffWeight v) {
  const std::size_t idx = solve_slot_exhaustive_index(
      actions.size(), [&](std::size_t i) { return evaluate(actions[i]); }, v);
  return actions[idx];
}

struct StabilityReport {
  double slope = 0.0;  // least-squares slope of the queue value over the last half
  bool stable = false; // final value / trace length below epsilon
};

// Mean-rate stability diagnostic. Throws TraceTooShort below 100 samples.
StabilityReport mean_rate_stability(std::span<const double> queue_trace, double epsilon = 1e-2);

// Named collection so scenarios can keep their queues and traces together.
class VirtualQueueSet {
 public:
  std::size_t add(VirtualQueue queue);

  std::size_t size() const { return queues_.size(); }
  const VirtualQueue& at(std::size_t i) const { return queues_.at(i); }
  // For constraints whose target moves over time (scheduled steps).
  VirtualQueue& mutable_at(std::size_t i) { return queues_.at(i); }
  std::span<const VirtualQueue> queues() const { return queues_; }

  // Applies update_virtual_queue and appends the new value to the trace.
  void apply(std::size_t i, double measured_metric);

  std::span<const double> trace(std::size_t i) const { return traces_.at(i); }

 private:
  std::vector<VirtualQueue> queues_;
  std::vector<std::vector<double>> traces_;
};

}  // namespace goiot
