#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geeg/spectral.hpp"
#include "geeg/types.hpp"

namespace geeg::synth {

// One sinusoid per band, at the band's midpoint.
inline constexpr std::array<double, kBandCount> kBandCentreHz{2.0, 6.0, 10.5, 21.5, 40.0};

struct Spike {
  double t_s = 0.0;
  std::size_t channel = 0;
  double amplitude_uv = 150.0;  // added to a single sample
};

// Ocular transient: raised cosine on the frontal pair, a tenth of it on
// the temporal pair.
struct Blink {
  double t_s = 0.0;  // onset
  double amplitude_uv = 150.0;
  double duration_s = 0.3;
};

// Head movement: accelerometer magnitude bump plus broadband EEG noise.
struct MovementBurst {
  double t_s = 0.0;
  double duration_s = 1.0;
  double accel_peak = 6.0;      // m/s² above baseline
  double eeg_noise_uv = 40.0;   // std of the added noise
};

struct ArtifactSchedule {
  std::vector<Spike> spikes;
  std::vector<Blink> blinks;
  std::vector<MovementBurst> movements;
};

using BandAmplitudes = std::array<std::array<double, kBandCount>, kChannelCount>;  // µV peak

struct GeneratorSpec {
  BandAmplitudes amplitudes{};
  double noise_std_uv = 0.0;
  ArtifactSchedule artifacts;
  double duration_s = 10.0;
  double sample_rate = kNominalSampleRate;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> phase_seed;  // shared phases let consecutive pieces join smoothly
  double t0_s = 0.0;                        // time of the first sample
  double accel_baseline = 9.81;
  double accel_noise = 0.0;
  SegmentLabel label = Baseline::EyesOpen;
};

// Throws InvalidSpec.
void validate(const GeneratorSpec& spec);

struct GroundTruth {
  std::array<std::array<double, kBandCount>, kChannelCount> band_power{};  // A²/2, µV²
  std::array<double, kBandCount> channel_mean{};
  // Sample indexes, sorted and unique, per channel where it matters.
  std::array<std::vector<std::size_t>, kChannelCount> amplitude_artifacts;  // |injected value| > 100 µV
  std::array<std::vector<std::size_t>, kChannelCount> gradient_artifacts;   // injected step > 50 µV
  std::vector<std::size_t> blink_samples;
  std::vector<std::size_t> movement_samples;
};

struct Generated {
  Segment segment;
  GroundTruth truth;
  std::vector<std::array<double, 3>> accel_xyz;  // per frame; magnitude equals frame accel_mag
};

Generated generate(const GeneratorSpec& spec);

// Amplitudes giving the requested channel-mean powers (µV²) in every
// channel, with right-hemisphere alpha scaled so that FAA equals faa.
BandAmplitudes amplitudes_for(const std::array<double, kBandCount>& powers, double faa = 0.0);

}  // namespace geeg::synth
