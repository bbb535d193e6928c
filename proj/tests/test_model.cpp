#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "doctest.h"
#include "goiot/errors.hpp"
#include "goiot/model.hpp"
#include "goiot/rng.hpp"

using namespace goiot;

TEST_CASE("pathloss keeps unit gain inside the reference distance") {
  RadioConfig radio;  // d0 = 1 m, exponent 3
  CHECK(pathloss_rayleigh_gain(0.25, radio, 1.0) == doctest::Approx(1.0));
  CHECK(pathloss_rayleigh_gain(1.0, radio, 1.0) == doctest::Approx(1.0));
  CHECK(pathloss_rayleigh_gain(2.0, radio, 1.0) == doctest::Approx(0.125));
  CHECK(pathloss_rayleigh_gain(2.0, radio, 0.37) == doctest::Approx(0.125 * 0.37));
  CHECK(pathloss_rayleigh_gain(5.0, radio, 0.0) == 0.0);

  double previous = 1.0;
  for (double d = 1.5; d < 20.0; d += 0.5) {
    const double g = pathloss_rayleigh_gain(d, radio, 1.0);
    CHECK(g < previous);
    previous = g;
  }
}

TEST_CASE("transmit power matches the rate equation and inverts") {
  RadioConfig radio;  // B = 1e5 Hz, N0 = 1e-17 W/Hz
  const double gain = 1e-3;
  const double duration = 0.01;

  // 1000 bits in 10 ms is r = B, so 2^(r/B) - 1 = 1.
  const double p = power_for_bits(1000.0, gain, radio, duration);
  const double expected =
      (std::exp2(1000.0 / duration / radio.bandwidth_per_device) - 1.0) *
      radio.noise_psd * radio.bandwidth_per_device / gain;
  CHECK(p == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p == doctest::Approx(1e-9).epsilon(1e-12));

  CHECK(bits_for_power(p, gain, radio, duration) == doctest::Approx(1000.0).epsilon(1e-9));
  CHECK(power_for_bits(0.0, gain, radio, duration) == 0.0);
  CHECK(power_for_bits(2000.0, gain, radio, duration) > p);

  // round trip across magnitudes
  for (double bits : {10.0, 400.0, 3e3, 2.8e4}) {
    const double q = power_for_bits(bits, gain, radio, duration);
    CHECK(bits_for_power(q, gain, radio, duration) == doctest::Approx(bits).epsilon(1e-9));
  }

  CHECK_THROWS_AS(power_for_bits(10.0, 0.0, radio, duration), ZeroGain);
  CHECK(power_for_bits(0.0, 0.0, radio, duration) == 0.0);
  CHECK(bits_for_power(0.0, gain, radio, duration) == 0.0);
  CHECK(bits_for_power(1e-9, 0.0, radio, duration) == 0.0);

  CHECK(power_for_bits_capped(1000.0, gain, radio, duration, 1e-8) ==
        doctest::Approx(p).epsilon(1e-12));
  CHECK_THROWS_AS(power_for_bits_capped(1000.0, gain, radio, duration, 1e-10),
                  InfeasiblePower);
}

TEST_CASE("cpu energy follows the cubic law") {
  CHECK(cpu_energy(1e9, 0.01, 1e-27) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(cpu_energy(0.0, 1.0, 1e-27) == 0.0);
  const double base = cpu_energy(7e8, 0.2, 1e-27);
  CHECK(cpu_energy(1.4e9, 0.2, 1e-27) == doctest::Approx(8.0 * base).epsilon(1e-12));
}

TEST_CASE("random streams are deterministic and separated") {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());

  RandomStream c(42, 8);
  RandomStream d(42, 7);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) any_diff |= (c.next_u64() != d.next_u64());
  CHECK(any_diff);

  std::set<std::uint64_t> seeds;
  for (std::uint64_t id = 0; id < 64; ++id) seeds.insert(derive_stream_seed(1, id));
  CHECK(seeds.size() == 64);
  CHECK(derive_stream_seed(1, 0) != derive_stream_seed(2, 0));
}

TEST_CASE("distribution draws have the right moments") {
  RandomStream stream(2024, 0);
  const int n = 100000;

  double usum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = stream.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    usum += u;
  }
  CHECK(usum / n == doctest::Approx(0.5).epsilon(0.01));

  double esum = 0.0;
  for (int i = 0; i < n; ++i) esum += stream.exponential1();
  CHECK(esum / n == doctest::Approx(1.0).epsilon(0.02));

  double zsum = 0.0, z2sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = stream.standard_normal();
    zsum += z;
    z2sum += z * z;
  }
  CHECK(std::abs(zsum / n) < 0.02);
  CHECK(z2sum / n == doctest::Approx(1.0).epsilon(0.03));

  double psum = 0.0;
  for (int i = 0; i < n; ++i) psum += static_cast<double>(stream.poisson(3.7));
  CHECK(psum / n == doctest::Approx(3.7).epsilon(0.03));
  CHECK(stream.poisson(0.0) == 0);
}
