#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "geeg/types.hpp"

namespace geeg {

enum class FilterKind { BandPass, LowPass, Notch };

struct FilterSpec {
  FilterKind kind = FilterKind::BandPass;
  double low_hz = 0.0;     // band-pass
  double high_hz = 0.0;    // band-pass; cutoff for low-pass
  double center_hz = 0.0;  // notch
  double q = 0.0;          // notch
  int order = 1;
  double sample_rate = kNominalSampleRate;
};

// Throws InvalidSpec when cutoffs are misordered, outside (0, fs/2), or the
// order / Q is not positive.
void validate(const FilterSpec& spec);

// One second-order section, a0 normalised to 1. First-order sections keep
// b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  FilterSpec spec;
  std::vector<Biquad> sections;

  std::complex<double> response(double hz) const;
  double magnitude(double hz) const { return std::abs(response(hz)); }

  // Reflected edge padding used by apply_zero_phase; also the minimum input
  // length (warm-up) and the edge region excluded from power estimates.
  std::size_t pad_length() const noexcept {
    return 3 * (2 * sections.size() + 1);
  }
};

// Digital Butterworth band-pass (bilinear transform with prewarping) of the
// given prototype order. Yields `order` second-order sections, each with
// one zero at DC and one at Nyquist.
FilterCoefficients design_bandpass(double low_hz, double high_hz, int order,
                                   double fs);

FilterCoefficients design_lowpass(double cutoff_hz, int order, double fs);

// Second-order IIR notch; -3 dB bandwidth is center_hz / q.
FilterCoefficients design_notch(double center_hz, double q, double fs);

// Single causal pass starting from rest.
std::vector<double> filter_causal(const FilterCoefficients& coeffs,
                                  std::span<const double> x);

// Forward-backward filtering with mirrored edge padding. Output length equals
// input length; the first and last pad_length() samples are edge region.
// Throws TooShortInput when x.size() <= 3 * pad_length() and NonFiniteInput
// on NaN/inf samples.
std::vector<double> apply_zero_phase(const FilterCoefficients& coeffs,
                                     std::span<const double> x);

struct PreprocessConfig {
  double low_hz = 0.5;
  double high_hz = 50.0;
  int order = 5;
  double notch_hz = 50.0;
  double notch_q = 30.0;
};

// Per channel: zero-phase band-pass then zero-phase notch. Labels and
// timestamps are unchanged.
Segment preprocess(const Segment& seg, const PreprocessConfig& config = {});

// Number of samples at each end of a preprocessed segment that fall in the
// band-pass edge region.
std::size_t preprocess_edge_length(double sample_rate,
                                   const PreprocessConfig& config = {});

}  // namespace geeg
