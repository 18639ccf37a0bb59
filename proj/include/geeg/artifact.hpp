#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geeg/types.hpp"

namespace geeg {

// Exclusion reasons, stored as a bit set per sample and channel.
enum class FlagReason : std::uint8_t {
  DeviceFlag = 1u << 0,
  Movement = 1u << 1,
  Amplitude = 1u << 2,
  Gradient = 1u << 3,
};

std::string_view to_string(FlagReason r) noexcept;

struct QualityMask {
  // reasons[i][c] == 0 means sample i is valid on channel c.
  std::vector<std::array<std::uint8_t, kChannelCount>> reasons;

  QualityMask() = default;
  explicit QualityMask(std::size_t n) : reasons(n) {}

  std::size_t size() const noexcept { return reasons.size(); }
  bool valid(std::size_t i, std::size_t c) const { return reasons[i][c] == 0; }
  bool has(std::size_t i, std::size_t c, FlagReason r) const {
    return (reasons[i][c] & static_cast<std::uint8_t>(r)) != 0;
  }
  void flag(std::size_t i, std::size_t c, FlagReason r) {
    reasons[i][c] |= static_cast<std::uint8_t>(r);
  }
  void flag_all(std::size_t i, FlagReason r) {
    for (std::size_t c = 0; c < kChannelCount; ++c) flag(i, c, r);
  }
  // Valid on all four channels.
  bool sample_valid(std::size_t i) const;
  std::size_t valid_sample_count() const;
  std::vector<bool> sample_validity() const;
  std::size_t flagged_count() const;  // invalid (sample, channel) cells
};

struct ArtifactThresholds {
  double amplitude_uv = 100.0;
  double gradient_uv_per_sample = 50.0;
  double movement_percentile = 95.0;
  double min_accel_coverage = 0.9;
};

// Linear interpolation between order statistics; p in [0, 100].
double percentile(std::vector<double> values, double p);

QualityMask flag_device(const Segment& seg);

// Flags every channel of frames whose accel_mag strictly exceeds the
// in-segment percentile. Frames without accel inherit the flag of the
// nearest preceding frame that has one. Throws MissingAccelStream below the
// coverage threshold.
QualityMask flag_movement(const Segment& seg, const ArtifactThresholds& t = {});

// |x| > threshold; expects a preprocessed segment.
QualityMask flag_amplitude(const Segment& seg, const ArtifactThresholds& t = {});

// |x[i] - x[i-1]| > threshold; sample 0 is never flagged. Throws
// TooShortInput below two samples.
QualityMask flag_gradient(const Segment& seg, const ArtifactThresholds& t = {});

struct ValidationOutcome {
  QualityMask mask;
  std::size_t valid_samples = 0;  // valid on all channels
  bool accepted = false;
};

// Union of reasons. Throws ShapeMismatch when masks differ in length.
ValidationOutcome combine_and_validate(std::span<const QualityMask> masks,
                                       std::size_t min_valid = 100);

struct IcaOptions {
  std::uint64_t seed = 0;
  int max_iterations = 1000;
  double tolerance = 1e-6;
  std::size_t min_samples = 512;
  double kurtosis_threshold = 8.0;
  double accel_correlation_threshold = 0.5;
  double low_freq_hz = 4.0;
  double low_freq_fraction = 0.8;
  double frontal_ratio = 2.0;
};

struct ComponentAssessment {
  std::size_t index = 0;
  double kurtosis = 0.0;  // excess kurtosis
  std::optional<double> accel_correlation;  // |Pearson r| with accel_mag
  double low_freq_fraction = 0.0;  // share of power below low_freq_hz
  double frontal_ratio = 0.0;  // min frontal weight / max temporal weight
  bool removed = false;
  std::string criterion;  // "motion", "blink" or empty
};

struct IcaResult {
  Eigen::Matrix4d mixing;    // channels x components
  Eigen::Matrix4d unmixing;  // components x channels
  Eigen::Vector4d mean;      // per-channel mean removed before decomposition
  Eigen::Matrix<double, 4, Eigen::Dynamic> sources;
  std::vector<std::size_t> removed;
  std::vector<ComponentAssessment> assessments;  // one per component
  int iterations = 0;

  // Channel data rebuilt from sources with `removed` components zeroed.
  Eigen::Matrix<double, 4, Eigen::Dynamic> reconstruct() const;
};

// Symmetric FastICA (log-cosh contrast) over the four channels followed by
// the conservative removal rule: a component is removed only when
// |kurtosis| > 8 and it either tracks accel_mag (|r| > 0.5) or carries a
// blink signature (> 80% power below 4 Hz, both frontal weights > 2x the
// temporal ones). Throws TooShortInput below min_samples, DegenerateInput on
// rank-deficient data and IcaNotConverged after max_iterations.
IcaResult run_ica(const Segment& seg, const IcaOptions& options = {});

// Copy of seg with channel data replaced by result.reconstruct().
Segment apply_ica(const Segment& seg, const IcaResult& result);

}  // namespace geeg
