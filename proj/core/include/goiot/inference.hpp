#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "goiot/model.hpp"
#include "goiot/opt.hpp"

namespace goiot::inference {

struct CompressionLevel {
  double bits_per_image = 0.0;
  double encode_cycles = 0.0;  // device cycles per image at this level
  double accuracy = 0.0;       // remote-classification accuracy
};

// One compression strategy family. Levels are ordered by bits_per_image and
// accuracy must be non-decreasing in bits.
struct CompressionProfile {
  std::string family;
  double local_accuracy_penalty = 0.05;  // accuracy loss when classifying on-device
  std::vector<CompressionLevel> levels;

  void validate() const;  // throws ConfigInvalid
};

// Three-stage pipeline state of one device. Images wait in local_images for
// the device CPU, ride tx_bits/tx_images over the uplink, then wait in
// remote_images for the edge server. tx_images mirrors tx_bits so queue
// conservation stays exact in image units.
struct DeviceQueues {
  double local_images = 0.0;
  double tx_bits = 0.0;
  double tx_images = 0.0;
  double remote_images = 0.0;

  double occupancy() const { return local_images + tx_images + remote_images; }
};

struct InferenceState {
  std::vector<DeviceQueues> devices;
  std::uint64_t slot = 0;
  // conservation audit counters, in images
  double admitted_total = 0.0;
  double classified_total = 0.0;
};

struct DeviceAction {
  int level = 0;                 // index into profile.levels
  bool offload = true;           // false: classify on-device
  double tx_bits = 0.0;          // uplink budget this slot
  double local_frequency = 0.0;  // cycles/s
  double es_frequency = 0.0;     // edge-server share, cycles/s
};

struct InferenceAction {
  std::vector<DeviceAction> devices;
};

struct InferenceParams {
  CompressionProfile profile;
  RadioConfig radio;
  double slot_duration = 0.01;          // s
  double classify_cycles = 2.5e7;       // ES cycles per offloaded image
  double local_classify_cycles = 1e7;   // device cycles per locally classified image
  double cpu_energy_coefficient = 1e-27;
  double es_energy_coefficient = 1e-29;
  double max_cpu_frequency = 1.5e9;
  double max_transmit_power = 0.25;     // W
  double es_frequency_cap = 2.5e9;      // per-device ES share cap (es_max / K)
  double arrival_rate = 0.6;            // images per slot per device
};

struct SlotMetrics {
  double energy = 0.0;        // J, device + network side
  double accuracy = 0.0;      // mean chosen-level accuracy across devices
  double admitted = 0.0;      // images admitted this slot
  double classified = 0.0;    // images classified this slot
};

// Advance every device one slot: arrivals join the encode queue, each stage
// serves its start-of-slot content, transfers land at slot end (an image
// needs at least one slot per stage). Throws InfeasibleAction when an action
// violates a frequency or power cap.
SlotMetrics step_inference_slot(InferenceState& state, const InferenceAction& action,
                                std::span<const double> arrivals, std::span<const double> gains,
                                const InferenceParams& params);

// Little's law: average end-to-end delay implied by the current occupancy.
double e2e_delay_estimate(double occupancy_images, double arrival_rate_images_per_s);
double e2e_delay_estimate(const InferenceState& state, double arrival_rate_per_slot,
                          double slot_duration);

// Discretized action grids shared by every slot.
struct InferenceGrids {
  std::vector<double> local_frequencies;  // includes 0
  std::vector<double> tx_bit_options;     // includes 0
  std::vector<double> es_frequencies;     // includes 0

  static InferenceGrids build(const InferenceParams& params, int frequency_levels, int tx_levels,
                              double max_tx_bits);
};

// Drift-plus-penalty slot solver. delay_queue and accuracy_queue are the two
// long-term constraints; the objective is separable across devices (global
// queue metrics are linear in per-device contributions), so each device is
// solved exhaustively on its own grid. Candidates breaching a cap for this
// slot's channel are excluded; tx = 0 keeps the space non-empty.
InferenceAction solve_inference_slot(const InferenceState& state, const VirtualQueue& delay_queue,
                                     const VirtualQueue& accuracy_queue, TradeoffWeight v,
                                     const InferenceGrids& grids,
                                     std::span<const double> arrivals,
                                     std::span<const double> gains,
                                     const InferenceParams& params, double delay_bound,
                                     double accuracy_target);

}  // namespace goiot::inference
