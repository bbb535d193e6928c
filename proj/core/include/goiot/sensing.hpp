#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "goiot/model.hpp"

namespace goiot::sensing {

// Spatial field living in the span of the first F real Fourier atoms over an
// L x L square. Coefficients have unit 2-norm, so the field has unit
// mean-square amplitude over the area.
struct FieldModel {
  int subspace_dimension = 5;      // F
  Eigen::VectorXd coefficients;    // length F, ||a|| = 1
  double area_side = 10.0;         // m
};

struct ObservationModel {
  Eigen::MatrixXd basis;         // N x F, row k = atoms at device k's position
  double noise_variance = 1e-4;  // sensing noise sigma_n^2
};

struct SensingAction {
  std::vector<int> bits;        // per device; 0 = inactive
  std::vector<double> powers;   // W; 0 exactly when bits == 0

  int active_count() const;
  double total_power() const;
};

struct EffectivenessSpec {
  double mse_max = 1e-2;
  double target = 0.0;  // required effectiveness, in [0, 1)

  // mse <= budget  <=>  effectiveness >= target
  double mse_budget() const { return mse_max * (1.0 - target); }
};

// (mse_max - mse) / mse_max, clamped below at 0 for mse above mse_max.
double effectiveness(double mse, double mse_max);

// Real 2-D Fourier atoms sampled at the device positions. Atom 0 is the
// constant; after that cos/sin pairs of integer frequency vectors (k1, k2)
// ordered by k1^2 + k2^2, ties lexicographic. Each atom has unit mean-square
// over the square, so the sampled columns are orthonormal under the normalized
// area measure. Throws SubspaceTooLarge when F exceeds what frequency_cap can
// enumerate.
Eigen::MatrixXd build_fourier_basis(std::span<const std::pair<double, double>> positions,
                                    int subspace_dimension, double area_side,
                                    int frequency_cap = 8);

// Uniform quantizer over [-range/2, range/2): step^2 / 12 with
// step = range / 2^bits. 0 bits means the device sends nothing; the nullopt
// sentinel marks it inactive rather than noiseless.
std::optional<double> quantization_noise_variance(int bits, double range);

// Weighted least-squares error: trace[(Phi^T R^-1 Phi)^-1] with
// R = diag(per_observation_variance). active_basis is M x F with M >= F.
// Throws RankDeficient when the information matrix condition number exceeds
// 1e12.
double estimation_mse(const Eigen::MatrixXd& active_basis,
                      const Eigen::VectorXd& per_observation_variance);

// Everything the per-slot allocators need for one channel realization.
struct SensingInstance {
  ObservationModel observation;
  EffectivenessSpec effectiveness;
  RadioConfig radio;
  double slot_duration = 0.01;              // s
  double quantizer_range = 2.0;             // D
  int max_bits = 12;                        // per-device cap
  std::vector<double> gains;                // channel gain per device
  std::vector<double> max_transmit_power;   // W, per device

  int device_count() const { return static_cast<int>(gains.size()); }
  void check() const;  // shape / range preconditions, throws Error
};

// Per-observation variance for a bit vector: sigma_n^2 + quantizer noise.
// Inactive devices are excluded; returns the active row indices too.
Eigen::VectorXd active_noise_variances(const SensingInstance& instance,
                                       std::span<const int> bits,
                                       std::vector<int>* active_rows = nullptr);

// Exact mse of an arbitrary bit vector (RankDeficient / Infeasible apply).
double action_mse(const SensingInstance& instance, std::span<const int> bits);

// Greedy marginal-utility allocation: repeatedly grant the bit with the best
// mse decrease per unit transmit-power increase until the budget is met, then
// prune devices whose removal keeps feasibility. Throws Infeasible when the
// budget cannot be met within the caps.
SensingAction allocate_bits_power(const SensingInstance& instance);

// Exhaustive minimum-power allocation for audit-sized instances
// (max 4^6 bit vectors); ties break to the lexicographically smallest vector.
SensingAction brute_force_allocation(const SensingInstance& instance);

// All devices quantize with the same minimal bit depth meeting the budget.
SensingAction baseline_equal_bits(const SensingInstance& instance);

// All devices spend the same transmit power; per-device bits follow from
// inverting the rate equation, and the common power is minimized by bisection.
SensingAction baseline_equal_power(const SensingInstance& instance);

struct OracleAuditReport {
  int instances = 0;
  int feasible = 0;              // instances where the oracle found a solution
  int greedy_infeasible = 0;     // oracle feasible but greedy threw
  int oracle_wins = 0;           // oracle power <= greedy power (expected: all)
  int within_ratio = 0;          // greedy power <= ratio_bound * oracle power
  double worst_ratio = 0.0;
  double mean_ratio = 0.0;
  double ratio_bound = 1.5;
};

// Randomized small-instance audit of the greedy against the brute-force
// oracle. Deterministic in `seed`.
OracleAuditReport run_oracle_audit(int instances, std::uint64_t seed, double ratio_bound = 1.5);

}  // namespace goiot::sensing
