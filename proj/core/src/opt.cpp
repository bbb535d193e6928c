#include "goiot/opt.hpp"

#include <algorithm>
#include <cassert>
#include <cstddef>

namespace goiot {

VirtualQueue update_virtual_queue(const VirtualQueue& queue, double measured_metric) {
  assert(queue.value >= 0.0);
  VirtualQueue next = queue;
  const double drift = queue.direction == ConstraintDirection::kStayBelow
                           ? measured_metric - queue.target
                           : queue.target - measured_metric;
  next.value = std::max(0.0, queue.value + drift);
  return next;
}

double drift_plus_penalty(TradeoffWeight v, const SlotObjective& objective) {
  assert(v.value >= 0.0);
  double total = v.value * objective.cost;
  for (std::size_t i = 0; i < objective.term_count; ++i) {
    total += objective.terms[i].first * objective.terms[i].second;
  }
  return total;
}

StabilityReport mean_rate_stability(std::span<const double> queue_trace, double epsilon) {
  if (queue_trace.size() < 100) {
    throw TraceTooShort("mean_rate_stability: need at least 100 samples, got " +
                        std::to_string(queue_trace.size()));
  }
  const std::size_t n = queue_trace.size();
  const std::size_t begin = n / 2;

  // Least-squares slope of value versus slot index over the last half.
  double mean_x = 0.0, mean_y = 0.0;
  const std::size_t m = n - begin;
  for (std::size_t t = begin; t < n; ++t) {
    mean_x += static_cast<double>(t);
    mean_y += queue_trace[t];
  }
  mean_x /= static_cast<double>(m);
  mean_y /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = begin; t < n; ++t) {
    const double dx = static_cast<double>(t) - mean_x;
    sxy += dx * (queue_trace[t] - mean_y);
    sxx += dx * dx;
  }

  StabilityReport report;
  report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  report.stable = queue_trace.back() / static_cast<double>(n) < epsilon;
  return report;
}

std::size_t VirtualQueueSet::add(VirtualQueue queue) {
  assert(queue.value >= 0.0);
  queues_.push_back(std::move(queue));
  traces_.emplace_back();
  return queues_.size() - 1;
}

void VirtualQueueSet::apply(std::size_t i, double measured_metric) {
  queues_.at(i) = update_virtual_queue(queues_.at(i), measured_metric);
  traces_.at(i).push_back(queues_[i].value);
}

}  // namespace goiot
