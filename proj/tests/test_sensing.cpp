#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "goiot/errors.hpp"
#include "goiot/rng.hpp"
#include "goiot/sensing.hpp"

using namespace goiot;
using namespace goiot::sensing;

namespace {

// Plain-loop weighted least-squares error: builds Phi^T R^-1 Phi without
// Eigen and inverts it by Gauss-Jordan elimination with partial pivoting.
// This is the independent second path the library result is audited against.
double mse_by_gauss_jordan(const Eigen::MatrixXd& basis, const Eigen::VectorXd& variances) {
  const int m = static_cast<int>(basis.rows());
  const int f = static_cast<int>(basis.cols());
  std::vector<std::vector<double>> a(f, std::vector<double>(2 * f, 0.0));
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < f; ++j) {
      double sum = 0.0;
      for (int k = 0; k < m; ++k) sum += basis(k, i) * basis(k, j) / variances(k);
      a[i][j] = sum;
    }
    a[i][f + i] = 1.0;
  }
  for (int col = 0; col < f; ++col) {
    int pivot = col;
    for (int row = col + 1; row < f; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    std::swap(a[col], a[pivot]);
    REQUIRE(std::abs(a[col][col]) > 0.0);
    const double inv = 1.0 / a[col][col];
    for (int j = 0; j < 2 * f; ++j) a[col][j] *= inv;
    for (int row = 0; row < f; ++row) {
      if (row == col) continue;
      const double factor = a[row][col];
      if (factor == 0.0) continue;
      for (int j = 0; j < 2 * f; ++j) a[row][j] -= factor * a[col][j];
    }
  }
  double trace = 0.0;
  for (int i = 0; i < f; ++i) trace += a[i][f + i];
  return trace;
}

SensingInstance make_instance(std::vector<std::pair<double, double>> positions, int f,
                              std::vector<double> gains, double mse_max, double target,
                              int max_bits = 12) {
  SensingInstance instance;
  instance.observation.basis = build_fourier_basis(positions, f, 10.0);
  instance.observation.noise_variance = 1e-4;
  instance.effectiveness.mse_max = mse_max;
  instance.effectiveness.target = target;
  instance.max_bits = max_bits;
  instance.max_transmit_power.assign(gains.size(), 0.25);
  instance.gains = std::move(gains);
  return instance;
}

}  // namespace

TEST_CASE("fourier atoms are unit mean-square and canonically ordered") {
  const std::vector<std::pair<double, double>> positions{{1.7, 3.1}, {9.2, 0.4}, {5.0, 5.0}};
  const double L = 10.0;

  const Eigen::MatrixXd dc = build_fourier_basis(positions, 1, L);
  for (int k = 0; k < 3; ++k) CHECK(dc(k, 0) == doctest::Approx(1.0));

  // frequency vectors ordered by norm then lexicographically: (0,1) first
  const Eigen::MatrixXd three = build_fourier_basis(positions, 3, L);
  const double two_pi = 6.283185307179586476925286766559;
  for (int k = 0; k < 3; ++k) {
    const double phase = two_pi * positions[k].second / L;
    CHECK(three(k, 1) == doctest::Approx(std::sqrt(2.0) * std::cos(phase)).epsilon(1e-12));
    CHECK(three(k, 2) == doctest::Approx(std::sqrt(2.0) * std::sin(phase)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(build_fourier_basis(positions, 10, L, 1), SubspaceTooLarge);
  CHECK_NOTHROW(build_fourier_basis(positions, 9, L, 1));
}

TEST_CASE("sampled gram matrix of twenty atoms is near identity") {
  const double L = 10.0;
  const int side = 200;
  std::vector<std::pair<double, double>> grid;
  grid.reserve(static_cast<std::size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      grid.emplace_back((i + 0.5) * L / side, (j + 0.5) * L / side);
    }
  }
  const Eigen::MatrixXd basis = build_fourier_basis(grid, 20, L);
  const Eigen::MatrixXd gram =
      basis.transpose() * basis / static_cast<double>(grid.size());
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const double expected = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(gram(i, j) - expected));
    }
  }
  CHECK(worst < 1e-2);
}

TEST_CASE("quantizer noise variance") {
  CHECK(quantization_noise_variance(1, 1.0).value() == doctest::Approx(1.0 / 48.0));
  CHECK(quantization_noise_variance(4, 2.0).value() ==
        doctest::Approx(1.3020833333e-3).epsilon(1e-9));
  CHECK_FALSE(quantization_noise_variance(0, 2.0).has_value());
}

TEST_CASE("estimation mse closed forms") {
  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd r(2);
  r << 0.01, 0.01;
  CHECK(estimation_mse(identity, r) == doctest::Approx(0.02).epsilon(1e-12));

  Eigen::MatrixXd ones(2, 1);
  ones << 1.0, 1.0;
  Eigen::VectorXd noise(2);
  noise << 1e-4, 1e-4;
  CHECK(estimation_mse(ones, noise) == doctest::Approx(5e-5).epsilon(1e-12));

  Eigen::MatrixXd rank_deficient(2, 2);
  rank_deficient << 1.0, 2.0, 1.0, 2.0;  // duplicate rows
  CHECK_THROWS_AS(estimation_mse(rank_deficient, r), RankDeficient);
}

TEST_CASE("estimation mse agrees with the gauss-jordan path on random instances") {
  int done = 0;
  std::uint64_t attempt = 0;
  while (done < 100) {
    RandomStream stream(777, attempt++);
    const int f = 1 + static_cast<int>(stream.uniform(0.0, 5.99));
    const int m = f + static_cast<int>(stream.uniform(0.0, 5.99));
    Eigen::MatrixXd basis(m, f);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < f; ++j) basis(i, j) = stream.standard_normal();
    }
    Eigen::VectorXd variances(m);
    for (int i = 0; i < m; ++i) variances(i) = stream.uniform(1e-4, 1.0);
    double library = 0.0;
    try {
      library = estimation_mse(basis, variances);
    } catch (const RankDeficient&) {
      continue;  // redraw ill-conditioned geometry
    }
    const double oracle = mse_by_gauss_jordan(basis, variances);
    CHECK(std::abs(library - oracle) <= 1e-9 * std::abs(oracle));
    ++done;
  }
}

TEST_CASE("granting bits never increases the mse") {
  int done = 0;
  std::uint64_t attempt = 0;
  while (done < 100) {
    RandomStream stream(888, attempt++);
    const int f = 1 + static_cast<int>(stream.uniform(0.0, 3.99));
    const int n = f + 1 + static_cast<int>(stream.uniform(0.0, 4.99));
    std::vector<std::pair<double, double>> positions(n);
    for (auto& p : positions) {
      p = {stream.uniform(0.0, 10.0), stream.uniform(0.0, 10.0)};
    }
    std::vector<double> gains(n, 1e-3);
    SensingInstance instance = make_instance(positions, f, gains, 1e-2, 0.0);

    std::vector<int> bits(n);
    for (auto& b : bits) b = 1 + static_cast<int>(stream.uniform(0.0, 10.99));
    double before = 0.0;
    try {
      before = action_mse(instance, bits);
    } catch (const RankDeficient&) {
      continue;
    }
    const int device = static_cast<int>(stream.uniform(0.0, n - 0.01));
    bits[static_cast<std::size_t>(device)] += 1;
    const double after = action_mse(instance, bits);
    CHECK(after <= before * (1.0 + 1e-12));

    // removing all quantization noise lower-bounds any finite-bit choice
    Eigen::VectorXd clean(n);
    for (int i = 0; i < n; ++i) clean(i) = instance.observation.noise_variance;
    CHECK(estimation_mse(instance.observation.basis, clean) <= after * (1.0 + 1e-12));
    ++done;
  }
}

TEST_CASE("single-coefficient budget buys four bits on the best channel") {
  // Two observers of the DC coefficient; only device 1 should transmit,
  // and 3 bits leave too much quantizer noise for the 5e-3 budget.
  SensingInstance instance =
      make_instance({{2.0, 2.0}, {7.0, 7.0}}, 1, {1e-3, 2e-3}, 1e-2, 0.5);
  const SensingAction action = allocate_bits_power(instance);
  CHECK(action.active_count() == 1);
  CHECK(action.bits[0] == 0);
  CHECK(action.bits[1] == 4);

  const SensingAction oracle = brute_force_allocation(instance);
  CHECK(oracle.bits == action.bits);
  CHECK(action.total_power() == doctest::Approx(oracle.total_power()).epsilon(1e-12));

  const double mse = action_mse(instance, action.bits);
  CHECK(mse <= instance.effectiveness.mse_budget());
  CHECK(effectiveness(mse, instance.effectiveness.mse_max) >= 0.5);
}

TEST_CASE("allocations are feasible and relabeling-invariant") {
  std::vector<std::pair<double, double>> positions{{1.0, 2.0}, {8.0, 1.0}, {4.0, 9.0}, {6.0, 5.0}};
  std::vector<double> gains{4e-3, 1e-3, 2.5e-3, 8e-4};
  SensingInstance instance = make_instance(positions, 2, gains, 1e-2, 0.3);
  const SensingAction action = allocate_bits_power(instance);
  CHECK(action.active_count() >= 2);
  const double mse = action_mse(instance, action.bits);
  const double eff = effectiveness(mse, instance.effectiveness.mse_max);
  CHECK(eff >= 0.3);
  CHECK(eff <= 1.0);
  for (std::size_t k = 0; k < action.bits.size(); ++k) {
    CHECK((action.bits[k] == 0) == (action.powers[k] == 0.0));
    CHECK(action.powers[k] <= instance.max_transmit_power[k]);
  }

  // reversing the device order must not change the achieved total power
  std::vector<std::pair<double, double>> reversed_positions(positions.rbegin(),
                                                            positions.rend());
  std::vector<double> reversed_gains(gains.rbegin(), gains.rend());
  SensingInstance mirrored = make_instance(reversed_positions, 2, reversed_gains, 1e-2, 0.3);
  const SensingAction mirrored_action = allocate_bits_power(mirrored);
  CHECK(mirrored_action.total_power() ==
        doctest::Approx(action.total_power()).epsilon(1e-9));
}

TEST_CASE("forced instances return the only feasible vector") {
  // budget 0.012 admits only the all-max pair (mse 0.0105 vs 0.0167 next)
  SensingInstance instance =
      make_instance({{3.0, 3.0}, {6.0, 6.0}}, 1, {1e-3, 1e-3}, 1.2e-2, 0.0, 2);
  const SensingAction oracle = brute_force_allocation(instance);
  CHECK(oracle.bits == std::vector<int>{2, 2});
  CHECK(allocate_bits_power(instance).bits == oracle.bits);

  SensingInstance hopeless =
      make_instance({{3.0, 3.0}, {6.0, 6.0}}, 1, {1e-3, 1e-3}, 5e-3, 0.0, 2);
  CHECK_THROWS_AS(brute_force_allocation(hopeless), Infeasible);
  CHECK_THROWS_AS(allocate_bits_power(hopeless), Infeasible);
  CHECK_THROWS_AS(baseline_equal_bits(hopeless), Infeasible);
}

TEST_CASE("greedy survives the exhaustive audit") {
  const OracleAuditReport report = run_oracle_audit(60, 7);
  CHECK(report.instances == 60);
  CHECK(report.feasible > 20);
  CHECK(report.greedy_infeasible == 0);
  CHECK(report.oracle_wins == report.feasible);
  CHECK(report.within_ratio * 100 >= report.feasible * 95);
  CHECK(report.worst_ratio >= 1.0);
}

TEST_CASE("baselines meet the budget and never beat the oracle") {
  int checked_bits = 0;
  int checked_power = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    RandomStream stream(321, s);
    const int n = 2 + static_cast<int>(stream.uniform(0.0, 2.99));
    const int f = 1 + static_cast<int>(stream.uniform(0.0, 1.99));
    std::vector<std::pair<double, double>> positions(n);
    for (auto& p : positions) p = {stream.uniform(0.0, 10.0), stream.uniform(0.0, 10.0)};
    std::vector<double> gains(n);
    for (auto& g : gains) g = stream.uniform(5e-4, 5e-3);
    SensingInstance instance = make_instance(positions, f, gains, 1e-2, 0.2, 3);

    SensingAction oracle;
    try {
      oracle = brute_force_allocation(instance);
    } catch (const Infeasible&) {
      continue;
    }
    const double budget = instance.effectiveness.mse_budget();
    try {
      const SensingAction equal_bits = baseline_equal_bits(instance);
      CHECK(action_mse(instance, equal_bits.bits) <= budget);
      CHECK(equal_bits.total_power() >= oracle.total_power() * (1.0 - 1e-12));
      ++checked_bits;
    } catch (const Infeasible&) {
    }
    try {
      const SensingAction equal_power = baseline_equal_power(instance);
      CHECK(action_mse(instance, equal_power.bits) <= budget);
      CHECK(equal_power.total_power() >= oracle.total_power() * (1.0 - 1e-12));
      ++checked_power;
    } catch (const Infeasible&) {
    }
  }
  CHECK(checked_bits > 5);
  CHECK(checked_power > 5);
}

TEST_CASE("active noise variances expose the active rows") {
  SensingInstance instance = make_instance(
      {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}, {4.0, 4.0}}, 1, {1e-3, 1e-3, 1e-3, 1e-3}, 1e-2, 0.0);
  std::vector<int> rows;
  const std::vector<int> bits{0, 3, 0, 1};
  const Eigen::VectorXd variances = active_noise_variances(instance, bits, &rows);
  CHECK(rows == std::vector<int>{1, 3});
  CHECK(variances.size() == 2);
  CHECK(variances(0) ==
        doctest::Approx(1e-4 + quantization_noise_variance(3, 2.0).value()).epsilon(1e-12));
  CHECK(variances(1) ==
        doctest::Approx(1e-4 + quantization_noise_variance(1, 2.0).value()).epsilon(1e-12));
}
