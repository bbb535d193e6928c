#pragma once

#include <cstdint>

namespace goiot {

// Discrete decision clock shared by every scenario.
struct SlotClock {
  std::uint64_t index = 0;
  double duration = 0.01;  // s
  void advance() { ++index; }
};

struct DeviceProfile {
  int id = 0;
  double x = 0.0;  // m
  double y = 0.0;  // m
  double max_cpu_frequency = 1.5e9;       // cycles/s
  double cpu_energy_coefficient = 1e-27;  // J/(cycles/s)^3 per second
  double max_transmit_power = 0.25;       // W
};

// Flat-fading channel snapshot for one device and slot.
struct ChannelState {
  int device_id = 0;
  double gain = 0.0;  // dimensionless power gain, >= 0
  std::uint64_t slot = 0;
};

struct RadioConfig {
  double bandwidth_per_device = 1e5;  // Hz
  double noise_psd = 1e-17;           // W/Hz
  double pathloss_exponent = 3.0;     // >= 2
  double reference_distance = 1.0;    // m
};

// min(1, (d0/d)^eta) * fading_draw. fading_draw is a unit-mean exponential
// sample supplied by the caller; the model owns no RNG state.
double pathloss_rayleigh_gain(double distance, const RadioConfig& radio, double fading_draw);

// Transmit power needed to move `bits` within `duration` over a Shannon-rate
// link: (2^(r/B) - 1) * N0 * B / gain with r = bits/duration. 0 bits is free.
// Throws ZeroGain when gain == 0 and bits > 0.
double power_for_bits(double bits, double gain, const RadioConfig& radio, double duration);
double power_for_bits(double bits, const ChannelState& channel, const RadioConfig& radio,
                      double duration);

// As above but enforces a cap; throws InfeasiblePower when exceeded.
double power_for_bits_capped(double bits, double gain, const RadioConfig& radio, double duration,
                             double max_transmit_power);

// Inverse of power_for_bits in `bits`: deliverable bits within `duration` at
// the given transmit power. Non-positive power or gain gives 0.
double bits_for_power(double power, double gain, const RadioConfig& radio, double duration);

// kappa * f^3 * duration
double cpu_energy(double frequency, double duration, double kappa);

}  // namespace goiot
