#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geeg/cohort.hpp"
#include "geeg/replay.hpp"
#include "geeg/session.hpp"

namespace geeg::synth {

// A replayable simulation read from a JSON spec file. Participant
// endpoints are left empty for the caller to fill.
struct Simulation {
  std::string kind;  // cohort, segment
  ReplaySession session;
  ReplayOptions options;
  double time_scale = 1.0;
  std::vector<GroupAssignment> assignments;  // cohort only
};

// Keys (all optional unless noted):
//   kind: "cohort" | "segment" (required)
//   time_scale, latency_ms: [min, max], frames_per_datagram,
//   device_clock_offset_s, replay_seed
//   cohort: per_group, immersive_arousal, display_arousal, within_sd,
//     original_arousal, eo_arousal, faa_sd, scale_sd, alpha_uv2,
//     ec_alpha_gain, seed, protocol: {eo_s, ec_s, block_s, pause_s}
//   segment: participant, duration_s, noise_std_uv, accel_noise, seed,
//     band_power: {delta..gamma µV²} with faa, or amplitudes: 4 x 5 µV,
//     label (marks the whole segment), gaze_hz,
//     spikes: [{t_s, channel, amplitude_uv}], blinks: [{t_s, amplitude_uv,
//     duration_s}], movements: [{t_s, duration_s, accel_peak, eeg_noise_uv}]
// Throws InvalidSpec.
Simulation simulation_from_json(const std::string& text);
Simulation load_simulation(const std::filesystem::path& file);

}  // namespace geeg::synth
