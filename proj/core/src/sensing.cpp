#include "goiot/sensing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "goiot/errors.hpp"
#include "goiot/rng.hpp"

namespace goiot::sensing {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kConditionLimit = 1e12;

// Canonical half-lattice of integer frequency vectors: (k1 > 0) or
// (k1 == 0, k2 > 0). Each vector contributes one cos and one sin atom;
// the excluded mirror (-k1, -k2) would duplicate them.
std::vector<std::pair<int, int>> frequency_vectors(int cap) {
  std::vector<std::pair<int, int>> vectors;
  for (int k1 = 0; k1 <= cap; ++k1) {
    const int k2_lo = k1 == 0 ? 1 : -cap;
    for (int k2 = k2_lo; k2 <= cap; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      vectors.emplace_back(k1, k2);
    }
  }
  std::sort(vectors.begin(), vectors.end(), [](const auto& a, const auto& b) {
    const int na = a.first * a.first + a.second * a.second;
    const int nb = b.first * b.first + b.second * b.second;
    if (na != nb) return na < nb;
    return a < b;
  });
  return vectors;
}

}  // namespace

int SensingAction::active_count() const {
  return static_cast<int>(std::count_if(bits.begin(), bits.end(), [](int b) { return b > 0; }));
}

double SensingAction::total_power() const {
  return std::accumulate(powers.begin(), powers.end(), 0.0);
}

double effectiveness(double mse, double mse_max) {
  assert(mse >= 0.0 && mse_max > 0.0);
  return std::max(0.0, (mse_max - mse) / mse_max);
}

Eigen::MatrixXd build_fourier_basis(std::span<const std::pair<double, double>> positions,
                                    int subspace_dimension, double area_side, int frequency_cap) {
  if (subspace_dimension < 1) throw Error("build_fourier_basis: subspace_dimension must be >= 1");
  if (area_side <= 0.0) throw Error("build_fourier_basis: area_side must be positive");
  if (frequency_cap < 1) throw Error("build_fourier_basis: frequency_cap must be >= 1");

  const auto vectors = frequency_vectors(frequency_cap);
  const int max_atoms = 1 + 2 * static_cast<int>(vectors.size());
  if (subspace_dimension > max_atoms) {
    throw SubspaceTooLarge("build_fourier_basis: " + std::to_string(subspace_dimension) +
                           " atoms requested but frequency cap " + std::to_string(frequency_cap) +
                           " only enumerates " + std::to_string(max_atoms));
  }

  const double sqrt2 = std::sqrt(2.0);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(positions.size()), subspace_dimension);
  for (Eigen::Index row = 0; row < basis.rows(); ++row) {
    const auto [x, y] = positions[static_cast<std::size_t>(row)];
    basis(row, 0) = 1.0;  // constant atom, unit mean-square over the square
    for (int f = 1; f < subspace_dimension; ++f) {
      const auto [k1, k2] = vectors[static_cast<std::size_t>((f - 1) / 2)];
      const double phase = kTwoPi * (k1 * x + k2 * y) / area_side;
      basis(row, f) = (f % 2 == 1) ? sqrt2 * std::cos(phase) : sqrt2 * std::sin(phase);
    }
  }
  return basis;
}

std::optional<double> quantization_noise_variance(int bits, double range) {
  assert(bits >= 0);
  assert(range > 0.0);
  if (bits == 0) return std::nullopt;
  const double step = range / std::exp2(bits);
  return step * step / 12.0;
}

double estimation_mse(const Eigen::MatrixXd& active_basis,
                      const Eigen::VectorXd& per_observation_variance) {
  assert(active_basis.rows() == per_observation_variance.size());
  const Eigen::Index f = active_basis.cols();

  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(f, f);
  for (Eigen::Index k = 0; k < active_basis.rows(); ++k) {
    const double variance = per_observation_variance(k);
    assert(variance > 0.0);
    info.noalias() += active_basis.row(k).transpose() * active_basis.row(k) / variance;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(info);
  if (solver.info() != Eigen::Success) {
    throw RankDeficient("estimation_mse: eigendecomposition failed");
  }
  const auto& eigenvalues = solver.eigenvalues();
  const double lambda_min = eigenvalues(0);
  const double lambda_max = eigenvalues(f - 1);
  if (lambda_min <= 0.0 || lambda_max / lambda_min > kConditionLimit) {
    throw RankDeficient("estimation_mse: information matrix condition number beyond 1e12");
  }
  double trace = 0.0;
  for (Eigen::Index i = 0; i < f; ++i) trace += 1.0 / eigenvalues(i);
  return trace;
}

void SensingInstance::check() const {
  const int n = device_count();
  if (n < 1) throw Error("SensingInstance: no devices");
  if (observation.basis.rows() != n) {
    throw Error("SensingInstance: basis rows do not match gain count");
  }
  if (observation.basis.cols() < 1) throw Error("SensingInstance: empty basis");
  if (observation.noise_variance <= 0.0) throw Error("SensingInstance: noise variance <= 0");
  if (effectiveness.mse_max <= 0.0) throw Error("SensingInstance: mse_max <= 0");
  if (effectiveness.target < 0.0 || effectiveness.target >= 1.0) {
    throw Error("SensingInstance: effectiveness target outside [0, 1)");
  }
  if (slot_duration <= 0.0) throw Error("SensingInstance: slot_duration <= 0");
  if (quantizer_range <= 0.0) throw Error("SensingInstance: quantizer_range <= 0");
  if (max_bits < 1) throw Error("SensingInstance: max_bits < 1");
  if (static_cast<int>(max_transmit_power.size()) != n) {
    throw Error("SensingInstance: max_transmit_power size mismatch");
  }
}

Eigen::VectorXd active_noise_variances(const SensingInstance& instance, std::span<const int> bits,
                                       std::vector<int>* active_rows) {
  assert(static_cast<int>(bits.size()) == instance.device_count());
  std::vector<double> variances;
  if (active_rows) active_rows->clear();
  for (int k = 0; k < instance.device_count(); ++k) {
    const auto quant = quantization_noise_variance(bits[k], instance.quantizer_range);
    if (!quant) continue;
    variances.push_back(instance.observation.noise_variance + *quant);
    if (active_rows) active_rows->push_back(k);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(variances.size()));
  for (std::size_t i = 0; i < variances.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = variances[i];
  }
  return out;
}

double action_mse(const SensingInstance& instance, std::span<const int> bits) {
  std::vector<int> rows;
  const Eigen::VectorXd variances = active_noise_variances(instance, bits, &rows);
  Eigen::MatrixXd active(static_cast<Eigen::Index>(rows.size()), instance.observation.basis.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    active.row(static_cast<Eigen::Index>(i)) = instance.observation.basis.row(rows[i]);
  }
  return estimation_mse(active, variances);
}

namespace {

// Per-device transmit power table; entries above the device cap are +inf so
// the allocators treat them as excluded candidates.
std::vector<std::vector<double>> power_tables(const SensingInstance& instance) {
  const int n = instance.device_count();
  std::vector<std::vector<double>> table(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& row = table[static_cast<std::size_t>(k)];
    row.resize(static_cast<std::size_t>(instance.max_bits) + 1,
               std::numeric_limits<double>::infinity());
    row[0] = 0.0;
    if (instance.gains[static_cast<std::size_t>(k)] <= 0.0) continue;  // stays excluded
    for (int b = 1; b <= instance.max_bits; ++b) {
      const double p = power_for_bits(static_cast<double>(b),
                                      instance.gains[static_cast<std::size_t>(k)], instance.radio,
                                      instance.slot_duration);
      if (p > instance.max_transmit_power[static_cast<std::size_t>(k)]) break;
      row[static_cast<std::size_t>(b)] = p;
    }
  }
  return table;
}

// Information weight of one observation quantized at b bits.
double information_weight(const SensingInstance& instance, int b) {
  if (b == 0) return 0.0;
  const auto quant = quantization_noise_variance(b, instance.quantizer_range);
  return 1.0 / (instance.observation.noise_variance + *quant);
}

SensingAction finish_action(const SensingInstance& instance, std::vector<int> bits,
                            const std::vector<std::vector<double>>& powers) {
  SensingAction action;
  action.bits = std::move(bits);
  action.powers.resize(action.bits.size(), 0.0);
  for (std::size_t k = 0; k < action.bits.size(); ++k) {
    if (action.bits[k] > 0) action.powers[k] = powers[k][static_cast<std::size_t>(action.bits[k])];
  }
  return action;
}

double bits_total_power(const std::vector<std::vector<double>>& powers,
                        const std::vector<int>& bits) {
  double total = 0.0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    total += powers[k][static_cast<std::size_t>(bits[k])];
  }
  return total;
}

// Greedy grant loop over the devices enabled in `allowed`; returns the first
// feasible bit vector reached, or nullopt when that subset cannot meet the
// budget within the bit/power caps.
std::optional<std::vector<int>> greedy_fill(const SensingInstance& instance,
                                            const std::vector<std::vector<double>>& powers,
                                            const std::vector<char>& allowed) {
  const int n = instance.device_count();
  const Eigen::Index f = instance.observation.basis.cols();
  const double budget = instance.effectiveness.mse_budget();

  std::vector<double> weight(static_cast<std::size_t>(instance.max_bits) + 1);
  for (int b = 0; b <= instance.max_bits; ++b) {
    weight[static_cast<std::size_t>(b)] = information_weight(instance, b);
  }

  // Ridge keeps the search merit finite before F devices are active; it is
  // tiny relative to the information scale 1/sigma_n^2 and never enters the
  // exact feasibility test.
  const double ridge = 1e-9 / instance.observation.noise_variance;
  Eigen::MatrixXd info = ridge * Eigen::MatrixXd::Identity(f, f);
  Eigen::MatrixXd info_inv = (1.0 / ridge) * Eigen::MatrixXd::Identity(f, f);
  double trace_inv = static_cast<double>(f) / ridge;

  std::vector<int> bits(static_cast<std::size_t>(n), 0);
  int active = 0;
  const int max_grants = n * instance.max_bits;

  for (int grant = 0; grant <= max_grants; ++grant) {
    // The ridged trace lower-bounds the exact mse, so it gates the (more
    // expensive) exact check.
    if (active >= f && trace_inv <= budget) {
      try {
        if (action_mse(instance, bits) <= budget) return bits;
      } catch (const RankDeficient&) {
        // ill-conditioned selection; keep granting
      }
    }

    int best_device = -1;
    double best_merit = -1.0;
    double best_dw = 0.0;
    for (int k = 0; k < n; ++k) {
      if (!allowed[static_cast<std::size_t>(k)]) continue;
      const int b = bits[static_cast<std::size_t>(k)];
      if (b >= instance.max_bits) continue;
      const double p_next = powers[static_cast<std::size_t>(k)][static_cast<std::size_t>(b + 1)];
      if (!std::isfinite(p_next)) continue;
      const double dp = p_next - powers[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)];
      const double dw = weight[static_cast<std::size_t>(b + 1)] - weight[static_cast<std::size_t>(b)];
      const auto phi = instance.observation.basis.row(k).transpose();
      const Eigen::VectorXd u = info_inv * phi;
      // Sherman-Morrison trace decrease for info += dw * phi * phi^T.
      const double dtrace = dw * u.squaredNorm() / (1.0 + dw * phi.dot(u));
      const double merit = dtrace / dp;
      if (merit > best_merit) {
        best_merit = merit;
        best_device = k;
        best_dw = dw;
      }
    }
    if (best_device < 0) break;  // every allowed device at its cap

    if (bits[static_cast<std::size_t>(best_device)] == 0) ++active;
    bits[static_cast<std::size_t>(best_device)] += 1;
    const auto phi = instance.observation.basis.row(best_device).transpose();
    info.noalias() += best_dw * phi * phi.transpose();
    info_inv = info.ldlt().solve(Eigen::MatrixXd::Identity(f, f));
    trace_inv = info_inv.trace();
  }

  return std::nullopt;
}

// Drop devices whose removal keeps the budget met, most expensive first,
// until no single removal survives the exact check.
void prune_devices(const SensingInstance& instance,
                   const std::vector<std::vector<double>>& powers, std::vector<int>& bits) {
  const int n = instance.device_count();
  const Eigen::Index f = instance.observation.basis.cols();
  const double budget = instance.effectiveness.mse_budget();
  int active = 0;
  for (int k = 0; k < n; ++k) {
    if (bits[static_cast<std::size_t>(k)] > 0) ++active;
  }

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> order;
    for (int k = 0; k < n; ++k) {
      if (bits[static_cast<std::size_t>(k)] > 0) order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double pa = powers[static_cast<std::size_t>(a)][static_cast<std::size_t>(bits[static_cast<std::size_t>(a)])];
      const double pb = powers[static_cast<std::size_t>(b)][static_cast<std::size_t>(bits[static_cast<std::size_t>(b)])];
      if (pa != pb) return pa > pb;
      return a < b;
    });
    for (int k : order) {
      if (active - 1 < static_cast<int>(f)) break;
      const int saved = bits[static_cast<std::size_t>(k)];
      bits[static_cast<std::size_t>(k)] = 0;
      bool ok = false;
      try {
        ok = action_mse(instance, bits) <= budget;
      } catch (const RankDeficient&) {
        ok = false;
      }
      if (ok) {
        --active;
        changed = true;
      } else {
        bits[static_cast<std::size_t>(k)] = saved;
      }
    }
  }
}

}  // namespace

SensingAction allocate_bits_power(const SensingInstance& instance) {
  instance.check();
  const int n = instance.device_count();
  const auto powers = power_tables(instance);

  std::vector<char> allowed(static_cast<std::size_t>(n), 1);
  auto filled = greedy_fill(instance, powers, allowed);
  if (!filled) {
    throw Infeasible("allocate_bits_power: effectiveness target unreachable within bit/power caps");
  }
  std::vector<int> bits = std::move(*filled);
  prune_devices(instance, powers, bits);

  // Consolidation: mid-search merits sometimes favour opening a cheap new
  // row over deepening existing ones, leaving one device more active than a
  // cheaper allocation needs. Re-solving with one active banned finds those
  // smaller supports; only strict power improvements are accepted, so the
  // loop terminates.
  double best_power = bits_total_power(powers, bits);
  bool improved = true;
  while (improved) {
    improved = false;
    std::vector<int> order;
    for (int k = 0; k < n; ++k) {
      if (bits[static_cast<std::size_t>(k)] > 0) order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double pa = powers[static_cast<std::size_t>(a)][static_cast<std::size_t>(bits[static_cast<std::size_t>(a)])];
      const double pb = powers[static_cast<std::size_t>(b)][static_cast<std::size_t>(bits[static_cast<std::size_t>(b)])];
      if (pa != pb) return pa > pb;
      return a < b;
    });
    for (int j : order) {
      std::vector<char> mask(static_cast<std::size_t>(n), 0);
      for (int k = 0; k < n; ++k) {
        mask[static_cast<std::size_t>(k)] = bits[static_cast<std::size_t>(k)] > 0 && k != j;
      }
      auto alt = greedy_fill(instance, powers, mask);
      if (!alt) continue;
      prune_devices(instance, powers, *alt);
      const double alt_power = bits_total_power(powers, *alt);
      if (alt_power < best_power * (1.0 - 1e-12)) {
        bits = std::move(*alt);
        best_power = alt_power;
        improved = true;
        break;
      }
    }
  }

  return finish_action(instance, std::move(bits), powers);
}

SensingAction brute_force_allocation(const SensingInstance& instance) {
  instance.check();
  const int n = instance.device_count();
  const double actions = std::pow(static_cast<double>(instance.max_bits) + 1.0, n);
  if (actions > 4096.0) {
    throw Error("brute_force_allocation: instance exceeds the 4^6 enumeration bound");
  }
  const Eigen::Index f = instance.observation.basis.cols();
  const double budget = instance.effectiveness.mse_budget();
  const auto powers = power_tables(instance);

  std::vector<int> bits(static_cast<std::size_t>(n), 0);
  std::vector<int> best_bits;
  double best_power = std::numeric_limits<double>::infinity();

  while (true) {
    double total = 0.0;
    int active = 0;
    bool reachable = true;
    for (int k = 0; k < n; ++k) {
      const double p = powers[static_cast<std::size_t>(k)][static_cast<std::size_t>(bits[static_cast<std::size_t>(k)])];
      if (!std::isfinite(p)) {
        reachable = false;
        break;
      }
      total += p;
      if (bits[static_cast<std::size_t>(k)] > 0) ++active;
    }
    // strict <: the first (lexicographically smallest) minimizer is kept
    if (reachable && active >= f && total < best_power) {
      try {
        if (action_mse(instance, bits) <= budget) {
          best_power = total;
          best_bits = bits;
        }
      } catch (const RankDeficient&) {
      }
    }

    // odometer, last device fastest: enumeration is lexicographic ascending
    int pos = n - 1;
    while (pos >= 0 && bits[static_cast<std::size_t>(pos)] == instance.max_bits) {
      bits[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    bits[static_cast<std::size_t>(pos)] += 1;
  }

  if (best_bits.empty()) {
    throw Infeasible("brute_force_allocation: no bit vector meets the effectiveness target");
  }
  return finish_action(instance, std::move(best_bits), powers);
}

SensingAction baseline_equal_bits(const SensingInstance& instance) {
  instance.check();
  const int n = instance.device_count();
  const auto powers = power_tables(instance);
  for (int b = 1; b <= instance.max_bits; ++b) {
    std::vector<int> bits(static_cast<std::size_t>(n), b);
    bool reachable = true;
    for (int k = 0; k < n; ++k) {
      if (!std::isfinite(powers[static_cast<std::size_t>(k)][static_cast<std::size_t>(b)])) {
        reachable = false;
        break;
      }
    }
    if (!reachable) break;  // power grows with b, no point trying deeper
    try {
      if (action_mse(instance, bits) <= instance.effectiveness.mse_budget()) {
        return finish_action(instance, std::move(bits), powers);
      }
    } catch (const RankDeficient&) {
    }
  }
  throw Infeasible("baseline_equal_bits: no common bit depth meets the effectiveness target");
}

SensingAction baseline_equal_power(const SensingInstance& instance) {
  instance.check();
  const int n = instance.device_count();
  const auto powers = power_tables(instance);
  const double p_cap =
      *std::min_element(instance.max_transmit_power.begin(), instance.max_transmit_power.end());

  const auto bits_at = [&](double p) {
    std::vector<int> bits(static_cast<std::size_t>(n), 0);
    for (int k = 0; k < n; ++k) {
      const double raw = bits_for_power(p, instance.gains[static_cast<std::size_t>(k)],
                                        instance.radio, instance.slot_duration);
      bits[static_cast<std::size_t>(k)] =
          std::min(instance.max_bits, static_cast<int>(std::floor(raw)));
    }
    return bits;
  };
  const auto feasible = [&](double p) {
    try {
      return action_mse(instance, bits_at(p)) <= instance.effectiveness.mse_budget();
    } catch (const RankDeficient&) {
      return false;
    }
  };

  if (!feasible(p_cap)) {
    throw Infeasible("baseline_equal_power: target unreachable at the common power cap");
  }
  double lo = 0.0, hi = p_cap;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  SensingAction action;
  action.bits = bits_at(hi);
  action.powers.resize(action.bits.size(), 0.0);
  for (std::size_t k = 0; k < action.bits.size(); ++k) {
    // A device whose channel cannot carry even one bit at p stays silent.
    if (action.bits[k] > 0) action.powers[k] = hi;
  }
  return action;
}

OracleAuditReport run_oracle_audit(int instances, std::uint64_t seed, double ratio_bound) {
  OracleAuditReport report;
  report.instances = instances;
  report.ratio_bound = ratio_bound;
  RandomStream rng(seed, 0);

  double ratio_sum = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int n = 3 + static_cast<int>(rng.next_u64() % 4);        // 3..6 devices
    const int f = 1 + static_cast<int>(rng.next_u64() % 3);        // 1..3 atoms
    const double area = 10.0;

    std::vector<std::pair<double, double>> positions;
    positions.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      positions.emplace_back(rng.uniform(0.0, area), rng.uniform(0.0, area));
    }

    SensingInstance instance;
    instance.observation.basis = build_fourier_basis(positions, f, area);
    instance.observation.noise_variance = 1e-4;
    instance.effectiveness.mse_max = 1e-2;
    instance.effectiveness.target = rng.uniform(0.0, 0.8);
    instance.radio = RadioConfig{};
    instance.slot_duration = 0.01;
    instance.quantizer_range = 2.0;
    instance.max_bits = 3;
    instance.max_transmit_power.assign(static_cast<std::size_t>(n), 0.25);
    instance.gains.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double dx = positions[static_cast<std::size_t>(k)].first - area / 2.0;
      const double dy = positions[static_cast<std::size_t>(k)].second - area / 2.0;
      const double dist = std::sqrt(dx * dx + dy * dy);
      instance.gains[static_cast<std::size_t>(k)] =
          pathloss_rayleigh_gain(dist, instance.radio, rng.exponential1());
    }

    SensingAction oracle;
    try {
      oracle = brute_force_allocation(instance);
    } catch (const Infeasible&) {
      continue;
    }
    ++report.feasible;

    SensingAction greedy;
    try {
      greedy = allocate_bits_power(instance);
    } catch (const Infeasible&) {
      ++report.greedy_infeasible;
      continue;
    }

    const double po = oracle.total_power();
    const double pg = greedy.total_power();
    if (po <= pg + 1e-15 * std::max(1.0, po)) ++report.oracle_wins;
    const double ratio = po > 0.0 ? pg / po : 1.0;
    ratio_sum += ratio;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (ratio <= ratio_bound) ++report.within_ratio;
  }
  const int compared = report.feasible - report.greedy_infeasible;
  report.mean_ratio = compared > 0 ? ratio_sum / compared : 0.0;
  return report;
}

}  // namespace goiot::sensing
