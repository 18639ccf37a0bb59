#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace geeg {

// Headband electrode order used everywhere: TP9, AF7, AF8, TP10.
enum class Channel : std::size_t { TP9 = 0, AF7 = 1, AF8 = 2, TP10 = 3 };

inline constexpr std::size_t kChannelCount = 4;
inline constexpr double kNominalSampleRate = 256.0;
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames{
    "TP9", "AF7", "AF8", "TP10"};

constexpr std::size_t index(Channel c) noexcept {
  return static_cast<std::size_t>(c);
}

enum class Quality : std::uint8_t { Good = 0, Poor = 1 };

struct SampleFrame {
  double t_ref = 0.0;  // seconds, shared reference clock
  std::array<double, kChannelCount> eeg{};  // µV
  std::array<Quality, kChannelCount> device_quality{};
  std::optional<double> accel_mag;  // m/s², absent without IMU stream
};

// Throws InvalidFrame when eeg or t_ref is not finite or t_ref < 0.
void validate(const SampleFrame& frame);

enum class Modality { OriginalArtwork, ImmersiveProjection, DisplayVideo };
enum class Posture { Standing, Seated };
enum class Baseline { EyesOpen, EyesClosed };

std::string_view to_string(Modality m) noexcept;
std::string_view to_string(Posture p) noexcept;
std::string_view to_string(Baseline b) noexcept;  // "EO" / "EC"
Modality parse_modality(std::string_view text);

// Original artwork is viewed standing; interpretive content seated.
constexpr Posture posture_for(Modality m) noexcept {
  return m == Modality::OriginalArtwork ? Posture::Standing : Posture::Seated;
}

struct ConditionLabel {
  Modality modality = Modality::OriginalArtwork;
  int block = 1;  // 1..3
  Posture posture = Posture::Standing;

  static ConditionLabel make(Modality m, int block);

  friend bool operator==(const ConditionLabel&, const ConditionLabel&) = default;
};

void validate(const ConditionLabel& label);

using SegmentLabel = std::variant<ConditionLabel, Baseline>;

// Text form used in event files and manifests: "EO", "EC" or
// "<Modality>:<block>", e.g. "ImmersiveProjection:2".
std::string format_label(const SegmentLabel& label);
SegmentLabel parse_label(std::string_view text);

struct Segment {
  std::string id;
  double sample_rate = kNominalSampleRate;
  std::vector<SampleFrame> frames;
  SegmentLabel label = Baseline::EyesOpen;

  std::size_t size() const noexcept { return frames.size(); }
  bool empty() const noexcept { return frames.empty(); }
  double duration() const noexcept {
    return static_cast<double>(frames.size()) / sample_rate;
  }
};

// Checks frame validity, strictly increasing t_ref and the sample-gap bound.
void validate(const Segment& seg);

std::vector<double> channel_samples(const Segment& seg, Channel c);
void set_channel_samples(Segment& seg, Channel c, std::span<const double> x);

// Sorts by t_ref; frames sharing a t_ref keep the last arrival.
std::vector<SampleFrame> order_frames(std::vector<SampleFrame> frames);

// Splits an ordered run wherever the gap deviates from 1/fs by 50% or more.
std::vector<std::vector<SampleFrame>> split_on_gaps(
    std::span<const SampleFrame> frames, double sample_rate);

}  // namespace geeg
