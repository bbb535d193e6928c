#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace goiot {

// splitmix64 step; used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hash (base_seed, stream_id) into an independent stream seed. Replications of
// a sweep get ids 0..n-1, so cells never share a stream regardless of the
// order they are executed in.
inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t stream_id) {
  std::uint64_t s = base_seed;
  const std::uint64_t a = splitmix64(s);
  s = base_seed ^ (0xBF58476D1CE4E5B9ull * (stream_id + 1));
  const std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x632BE59BD9B4E019ull + (a << 6) + (a >> 2));
}

// Deterministic random stream. The distributions are hand-rolled on top of
// mt19937_64 because the standard ones are implementation-defined and the
// harness promises byte-identical output for a given (config, seed).
class RandomStream {
 public:
  RandomStream(std::uint64_t base_seed, std::uint64_t stream_id)
      : engine_(derive_stream_seed(base_seed, stream_id)) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unit-mean exponential; squared magnitude of unit-variance Rayleigh fading
  double exponential1() { return -std::log1p(-uniform01()); }

  double standard_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform01();
    if (u <= 0.0) u = 0x1.0p-53;
    const double v = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Poisson via inversion for small means, normal approximation above 30.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
      const double d = mean + std::sqrt(mean) * standard_normal();
      return d <= 0.0 ? 0 : static_cast<std::uint64_t>(d + 0.5);
    }
    const double limit = std::exp(-mean);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace goiot
