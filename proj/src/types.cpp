#include "geeg/types.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>

#include "geeg/error.hpp"

namespace geeg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::TooShortInput: return "too-short-input";
    case ErrorCode::NonFiniteInput: return "non-finite-input";
    case ErrorCode::InvalidFrame: return "invalid-frame";
    case ErrorCode::InvalidSegment: return "invalid-segment";
    case ErrorCode::MissingAccelStream: return "missing-accel-stream";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::IcaNotConverged: return "ica-not-converged";
    case ErrorCode::TooFewValidSamples: return "too-few-valid-samples";
    case ErrorCode::ZeroTotalPower: return "zero-total-power";
    case ErrorCode::NonPositivePower: return "nonpositive-power";
    case ErrorCode::ZeroAlpha: return "zero-alpha";
    case ErrorCode::SubjectMismatch: return "subject-mismatch";
    case ErrorCode::DegenerateSpread: return "degenerate-spread";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::LengthMismatch: return "length-mismatch";
    case ErrorCode::MalformedPacket: return "malformed-packet";
    case ErrorCode::ArityMismatch: return "arity-mismatch";
    case ErrorCode::ConnectionRefused: return "connection-refused";
    case ErrorCode::SubscriptionDenied: return "subscription-denied";
    case ErrorCode::PayloadDecode: return "payload-decode";
    case ErrorCode::NetworkUnreachable: return "network-unreachable";
    case ErrorCode::Io: return "io";
    case ErrorCode::FileLoad: return "file-load";
    case ErrorCode::MissingBaseline: return "missing-baseline";
    case ErrorCode::EmptySession: return "empty-session";
    case ErrorCode::InsufficientCell: return "insufficient-cell";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::Protocol: return "protocol";
  }
  return "unknown";
}

void validate(const SampleFrame& frame) {
  if (!std::isfinite(frame.t_ref) || frame.t_ref < 0.0) {
    throw Error(ErrorCode::InvalidFrame, "frame t_ref must be finite and >= 0");
  }
  for (double v : frame.eeg) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidFrame, "frame eeg value is not finite");
    }
  }
  if (frame.accel_mag && !std::isfinite(*frame.accel_mag)) {
    throw Error(ErrorCode::InvalidFrame, "frame accel_mag is not finite");
  }
}

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::OriginalArtwork: return "OriginalArtwork";
    case Modality::ImmersiveProjection: return "ImmersiveProjection";
    case Modality::DisplayVideo: return "DisplayVideo";
  }
  return "?";
}

std::string_view to_string(Posture p) noexcept {
  return p == Posture::Standing ? "standing" : "seated";
}

std::string_view to_string(Baseline b) noexcept {
  return b == Baseline::EyesOpen ? "EO" : "EC";
}

Modality parse_modality(std::string_view text) {
  for (auto m : {Modality::OriginalArtwork, Modality::ImmersiveProjection,
                 Modality::DisplayVideo}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorCode::InvalidSpec,
              "unknown modality '" + std::string(text) + "'");
}

ConditionLabel ConditionLabel::make(Modality m, int block) {
  ConditionLabel label{m, block, posture_for(m)};
  validate(label);
  return label;
}

void validate(const ConditionLabel& label) {
  if (label.block < 1 || label.block > 3) {
    throw Error(ErrorCode::InvalidSpec, "block position must be 1, 2 or 3");
  }
  if (label.posture != posture_for(label.modality)) {
    throw Error(ErrorCode::InvalidSpec,
                "posture does not match modality " +
                    std::string(to_string(label.modality)));
  }
}

std::string format_label(const SegmentLabel& label) {
  if (const auto* b = std::get_if<Baseline>(&label)) {
    return std::string(to_string(*b));
  }
  const auto& c = std::get<ConditionLabel>(label);
  return std::string(to_string(c.modality)) + ":" + std::to_string(c.block);
}

SegmentLabel parse_label(std::string_view text) {
  if (text == "EO") return Baseline::EyesOpen;
  if (text == "EC") return Baseline::EyesClosed;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::InvalidSpec,
                "label '" + std::string(text) + "' is not EO, EC or Modality:block");
  }
  int block = 0;
  const auto digits = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), block);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::InvalidSpec, "bad block in label '" + std::string(text) + "'");
  }
  return ConditionLabel::make(parse_modality(text.substr(0, colon)), block);
}

void validate(const Segment& seg) {
  if (!(seg.sample_rate > 0.0) || !std::isfinite(seg.sample_rate)) {
    throw Error(ErrorCode::InvalidSegment, "sample rate must be positive");
  }
  if (const auto* c = std::get_if<ConditionLabel>(&seg.label)) validate(*c);
  const double period = 1.0 / seg.sample_rate;
  for (std::size_t i = 0; i < seg.frames.size(); ++i) {
    validate(seg.frames[i]);
    if (i == 0) continue;
    const double gap = seg.frames[i].t_ref - seg.frames[i - 1].t_ref;
    if (!(gap > 0.0)) {
      throw Error(ErrorCode::InvalidSegment,
                  "t_ref not strictly increasing at frame " + std::to_string(i));
    }
    if (std::abs(gap - period) >= 0.5 * period) {
      throw Error(ErrorCode::InvalidSegment,
                  "sample gap out of bounds at frame " + std::to_string(i));
    }
  }
}

std::vector<double> channel_samples(const Segment& seg, Channel c) {
  std::vector<double> out;
  out.reserve(seg.frames.size());
  for (const auto& f : seg.frames) out.push_back(f.eeg[index(c)]);
  return out;
}

void set_channel_samples(Segment& seg, Channel c, std::span<const double> x) {
  if (x.size() != seg.frames.size()) {
    throw Error(ErrorCode::ShapeMismatch, "channel length differs from segment");
  }
  for (std::size_t i = 0; i < x.size(); ++i) seg.frames[i].eeg[index(c)] = x[i];
}

std::vector<SampleFrame> order_frames(std::vector<SampleFrame> frames) {
  std::stable_sort(frames.begin(), frames.end(),
                   [](const SampleFrame& a, const SampleFrame& b) {
                     return a.t_ref < b.t_ref;
                   });
  // Within a run of equal t_ref the stable sort kept arrival order, so the
  // last element of each run is the latest arrival.
  std::vector<SampleFrame> out;
  out.reserve(frames.size());
  for (auto& f : frames) {
    if (!out.empty() && out.back().t_ref == f.t_ref) {
      out.back() = f;
    } else {
      out.push_back(f);
    }
  }
  return out;
}

std::vector<std::vector<SampleFrame>> split_on_gaps(
    std::span<const SampleFrame> frames, double sample_rate) {
  std::vector<std::vector<SampleFrame>> runs;
  const double period = 1.0 / sample_rate;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const bool fresh =
        i == 0 || std::abs((frames[i].t_ref - frames[i - 1].t_ref) - period) >=
                      0.5 * period;
    if (fresh) runs.emplace_back();
    runs.back().push_back(frames[i]);
  }
  return runs;
}

}  // namespace geeg
