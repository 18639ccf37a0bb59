#include "geeg/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geeg/error.hpp"

namespace geeg {

std::string_view to_string(FlagReason r) noexcept {
  switch (r) {
    case FlagReason::DeviceFlag: return "device_flag";
    case FlagReason::Movement: return "movement";
    case FlagReason::Amplitude: return "amplitude";
    case FlagReason::Gradient: return "gradient";
  }
  return "?";
}

bool QualityMask::sample_valid(std::size_t i) const {
  for (auto r : reasons[i]) {
    if (r != 0) return false;
  }
  return true;
}

std::size_t QualityMask::valid_sample_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < reasons.size(); ++i) n += sample_valid(i) ? 1 : 0;
  return n;
}

std::vector<bool> QualityMask::sample_validity() const {
  std::vector<bool> out(reasons.size());
  for (std::size_t i = 0; i < reasons.size(); ++i) out[i] = sample_valid(i);
  return out;
}

std::size_t QualityMask::flagged_count() const {
  std::size_t n = 0;
  for (const auto& row : reasons) {
    for (auto r : row) n += r != 0 ? 1 : 0;
  }
  return n;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw Error(ErrorCode::TooShortInput, "percentile of empty set");
  }
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 *
                     static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

QualityMask flag_device(const Segment& seg) {
  QualityMask mask(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      if (seg.frames[i].device_quality[c] == Quality::Poor) {
        mask.flag(i, c, FlagReason::DeviceFlag);
      }
    }
  }
  return mask;
}

QualityMask flag_movement(const Segment& seg, const ArtifactThresholds& t) {
  std::vector<double> accel;
  accel.reserve(seg.size());
  for (const auto& f : seg.frames) {
    if (f.accel_mag) accel.push_back(*f.accel_mag);
  }
  if (seg.empty() || static_cast<double>(accel.size()) <
                         t.min_accel_coverage * static_cast<double>(seg.size())) {
    throw Error(ErrorCode::MissingAccelStream,
                "accel_mag present on " + std::to_string(accel.size()) + " of " +
                    std::to_string(seg.size()) + " frames");
  }
  const double threshold = percentile(std::move(accel), t.movement_percentile);

  QualityMask mask(seg.size());
  bool carried = false;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const auto& a = seg.frames[i].accel_mag;
    if (a) carried = *a > threshold;
    if (carried) mask.flag_all(i, FlagReason::Movement);
  }
  return mask;
}

QualityMask flag_amplitude(const Segment& seg, const ArtifactThresholds& t) {
  QualityMask mask(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      if (std::abs(seg.frames[i].eeg[c]) > t.amplitude_uv) {
        mask.flag(i, c, FlagReason::Amplitude);
      }
    }
  }
  return mask;
}

QualityMask flag_gradient(const Segment& seg, const ArtifactThresholds& t) {
  if (seg.size() < 2) {
    throw Error(ErrorCode::TooShortInput, "gradient criterion needs >= 2 samples");
  }
  QualityMask mask(seg.size());
  for (std::size_t i = 1; i < seg.size(); ++i) {
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const double step = seg.frames[i].eeg[c] - seg.frames[i - 1].eeg[c];
      if (std::abs(step) > t.gradient_uv_per_sample) {
        mask.flag(i, c, FlagReason::Gradient);
      }
    }
  }
  return mask;
}

ValidationOutcome combine_and_validate(std::span<const QualityMask> masks,
                                       std::size_t min_valid) {
  ValidationOutcome out;
  if (masks.empty()) return out;
  const std::size_t n = masks.front().size();
  for (const auto& m : masks) {
    if (m.size() != n) {
      throw Error(ErrorCode::ShapeMismatch,
                  "quality masks differ in length (" + std::to_string(n) + " vs " +
                      std::to_string(m.size()) + ")");
    }
  }
  out.mask = QualityMask(n);
  for (const auto& m : masks) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        out.mask.reasons[i][c] |= m.reasons[i][c];
      }
    }
  }
  out.valid_samples = out.mask.valid_sample_count();
  out.accepted = out.valid_samples >= min_valid;
  return out;
}

}  // namespace geeg
