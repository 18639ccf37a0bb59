#include "geeg/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "geeg/error.hpp"

namespace geeg {
namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;

// Analog Butterworth prototype poles (unit cutoff), left half plane.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + order + 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

double prewarp(double hz, double fs) { return 2.0 * fs * std::tan(kPi * hz / fs); }

// Splits digital poles into conjugate-pair representatives and real poles.
void partition_poles(const std::vector<cplx>& poles, std::vector<cplx>& pairs,
                     std::vector<double>& reals) {
  for (const auto& z : poles) {
    const double tol = 1e-10 * std::max(1.0, std::abs(z));
    if (z.imag() > tol) {
      pairs.push_back(z);
    } else if (std::abs(z.imag()) <= tol) {
      reals.push_back(z.real());
    }
  }
  std::sort(reals.begin(), reals.end());
}

void scale_gain(FilterCoefficients& fc, double gain) {
  const double per_section =
      std::pow(gain, 1.0 / static_cast<double>(fc.sections.size()));
  for (auto& s : fc.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
}

// Steady-state DF2T state for a constant input of 1 through one section.
std::pair<double, double> unit_steady_state(const Biquad& s, double& gain) {
  const double den = 1.0 + s.a1 + s.a2;
  gain = (s.b0 + s.b1 + s.b2) / den;
  return {gain - s.b0, s.b2 - s.a2 * gain};
}

// Cascade pass in transposed direct form II, in place. The state starts as if
// the input had been constant at `level` forever.
void cascade_pass(const std::vector<Biquad>& sections, std::vector<double>& x,
                  double level) {
  double input_level = level;
  for (const auto& s : sections) {
    double g = 0.0;
    const auto [u1, u2] = unit_steady_state(s, g);
    double z1 = u1 * input_level;
    double z2 = u2 * input_level;
    for (double& v : x) {
      const double y = s.b0 * v + z1;
      z1 = s.b1 * v - s.a1 * y + z2;
      z2 = s.b2 * v - s.a2 * y;
      v = y;
    }
    input_level *= g;
  }
}

double head_mean(const std::vector<double>& x, std::size_t count) {
  count = std::min(count, x.size());
  if (count == 0) return 0.0;
  return std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(count), 0.0) /
         static_cast<double>(count);
}

}  // namespace

void validate(const FilterSpec& spec) {
  const double nyquist = spec.sample_rate / 2.0;
  if (!(spec.sample_rate > 0.0) || !std::isfinite(spec.sample_rate)) {
    throw Error(ErrorCode::InvalidSpec, "sample rate must be positive");
  }
  if (spec.kind != FilterKind::Notch && spec.order < 1) {
    throw Error(ErrorCode::InvalidSpec, "filter order must be >= 1");
  }
  switch (spec.kind) {
    case FilterKind::BandPass:
      if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz &&
            spec.high_hz < nyquist)) {
        throw Error(ErrorCode::InvalidSpec,
                    "band-pass requires 0 < low_hz < high_hz < fs/2 (got " +
                        std::to_string(spec.low_hz) + ", " +
                        std::to_string(spec.high_hz) + ")");
      }
      break;
    case FilterKind::LowPass:
      if (!(spec.high_hz > 0.0 && spec.high_hz < nyquist)) {
        throw Error(ErrorCode::InvalidSpec, "low-pass requires 0 < cutoff < fs/2");
      }
      break;
    case FilterKind::Notch:
      if (!(spec.center_hz > 0.0 && spec.center_hz < nyquist)) {
        throw Error(ErrorCode::InvalidSpec, "notch requires 0 < center_hz < fs/2");
      }
      if (!(spec.q > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "notch requires q > 0");
      }
      break;
  }
}

std::complex<double> FilterCoefficients::response(double hz) const {
  const cplx zinv = std::polar(1.0, -2.0 * kPi * hz / spec.sample_rate);
  const cplx zinv2 = zinv * zinv;
  cplx h{1.0, 0.0};
  for (const auto& s : sections) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
  }
  return h;
}

FilterCoefficients design_bandpass(double low_hz, double high_hz, int order,
                                   double fs) {
  FilterCoefficients fc;
  fc.spec = FilterSpec{FilterKind::BandPass, low_hz, high_hz, 0.0, 0.0, order, fs};
  validate(fc.spec);

  const double wl = prewarp(low_hz, fs);
  const double wh = prewarp(high_hz, fs);
  const double w0 = std::sqrt(wl * wh);
  const double bw = wh - wl;

  std::vector<cplx> digital;
  digital.reserve(2 * static_cast<std::size_t>(order));
  for (const auto& p : prototype_poles(order)) {
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    digital.push_back(bilinear(half + root, fs));
    digital.push_back(bilinear(half - root, fs));
  }

  std::vector<cplx> pairs;
  std::vector<double> reals;
  partition_poles(digital, pairs, reals);
  for (const auto& z : pairs) {
    fc.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    fc.sections.push_back(
        {1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});
  }
  if (fc.sections.size() != static_cast<std::size_t>(order)) {
    throw Error(ErrorCode::InvalidSpec, "band-pass pole pairing failed");
  }

  const double f0 = fs / kPi * std::atan(w0 / (2.0 * fs));
  scale_gain(fc, 1.0 / fc.magnitude(f0));
  return fc;
}

FilterCoefficients design_lowpass(double cutoff_hz, int order, double fs) {
  FilterCoefficients fc;
  fc.spec = FilterSpec{FilterKind::LowPass, 0.0, cutoff_hz, 0.0, 0.0, order, fs};
  validate(fc.spec);

  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> digital;
  for (const auto& p : prototype_poles(order)) digital.push_back(bilinear(p * wc, fs));

  std::vector<cplx> pairs;
  std::vector<double> reals;
  partition_poles(digital, pairs, reals);
  for (const auto& z : pairs) {
    fc.sections.push_back({1.0, 2.0, 1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (double r : reals) fc.sections.push_back({1.0, 1.0, 0.0, -r, 0.0});

  scale_gain(fc, 1.0 / fc.magnitude(0.0));
  return fc;
}

FilterCoefficients design_notch(double center_hz, double q, double fs) {
  FilterCoefficients fc;
  fc.spec = FilterSpec{FilterKind::Notch, 0.0, 0.0, center_hz, q, 2, fs};
  validate(fc.spec);

  const double w0 = 2.0 * kPi * center_hz / fs;
  const double beta = std::tan(w0 / q / 2.0);
  const double g = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  fc.sections.push_back({g, -2.0 * g * c, g, -2.0 * g * c, 2.0 * g - 1.0});
  return fc;
}

std::vector<double> filter_causal(const FilterCoefficients& coeffs,
                                  std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  cascade_pass(coeffs.sections, y, 0.0);
  return y;
}

std::vector<double> apply_zero_phase(const FilterCoefficients& coeffs,
                                     std::span<const double> x) {
  const std::size_t pad = coeffs.pad_length();
  if (x.size() <= 3 * pad) {
    throw Error(ErrorCode::TooShortInput,
                "zero-phase filtering needs more than " + std::to_string(3 * pad) +
                    " samples, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw Error(ErrorCode::NonFiniteInput,
                  "non-finite sample at index " + std::to_string(i));
    }
  }

  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(x[n - 1 - i]);

  cascade_pass(coeffs.sections, ext, head_mean(ext, pad));
  std::reverse(ext.begin(), ext.end());
  cascade_pass(coeffs.sections, ext, head_mean(ext, pad));
  std::reverse(ext.begin(), ext.end());

  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Segment preprocess(const Segment& seg, const PreprocessConfig& config) {
  validate(seg);
  const auto bandpass =
      design_bandpass(config.low_hz, config.high_hz, config.order, seg.sample_rate);
  const auto notch = design_notch(config.notch_hz, config.notch_q, seg.sample_rate);

  Segment out = seg;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto ch = static_cast<Channel>(c);
    const auto x = channel_samples(seg, ch);
    const auto y = apply_zero_phase(notch, apply_zero_phase(bandpass, x));
    set_channel_samples(out, ch, y);
  }
  return out;
}

std::size_t preprocess_edge_length(double sample_rate,
                                   const PreprocessConfig& config) {
  const auto bandpass =
      design_bandpass(config.low_hz, config.high_hz, config.order, sample_rate);
  const auto notch = design_notch(config.notch_hz, config.notch_q, sample_rate);
  return std::max(bandpass.pad_length(), notch.pad_length());
}

}  // namespace geeg
