#include "goiot/model.hpp"

#include <cassert>
#include <cmath>
#include <string>

#include "goiot/errors.hpp"

namespace goiot {

double pathloss_rayleigh_gain(double distance, const RadioConfig& radio, double fading_draw) {
  assert(distance >= 0.0);
  assert(fading_draw >= 0.0);
  double pathloss = 1.0;
  if (distance > radio.reference_distance) {
    pathloss = std::pow(radio.reference_distance / distance, radio.pathloss_exponent);
  }
  return pathloss * fading_draw;
}

double power_for_bits(double bits, double gain, const RadioConfig& radio, double duration) {
  assert(bits >= 0.0);
  assert(duration > 0.0);
  if (bits == 0.0) return 0.0;
  if (gain <= 0.0) {
    throw ZeroGain("power_for_bits: zero channel gain with " + std::to_string(bits) +
                   " bits to send");
  }
  const double rate = bits / duration;
  const double b = radio.bandwidth_per_device;
  return (std::exp2(rate / b) - 1.0) * radio.noise_psd * b / gain;
}

double power_for_bits(double bits, const ChannelState& channel, const RadioConfig& radio,
                      double duration) {
  return power_for_bits(bits, channel.gain, radio, duration);
}

double power_for_bits_capped(double bits, double gain, const RadioConfig& radio, double duration,
                             double max_transmit_power) {
  const double p = power_for_bits(bits, gain, radio, duration);
  if (p > max_transmit_power) {
    throw InfeasiblePower("power_for_bits: " + std::to_string(p) + " W exceeds cap " +
                          std::to_string(max_transmit_power) + " W");
  }
  return p;
}

double bits_for_power(double power, double gain, const RadioConfig& radio, double duration) {
  assert(duration > 0.0);
  if (power <= 0.0 || gain <= 0.0) return 0.0;
  const double b = radio.bandwidth_per_device;
  const double snr = power * gain / (radio.noise_psd * b);
  return duration * b * std::log2(1.0 + snr);
}

double cpu_energy(double frequency, double duration, double kappa) {
  assert(frequency >= 0.0);
  assert(duration >= 0.0);
  return kappa * frequency * frequency * frequency * duration;
}

}  // namespace goiot
