#pragma once

// Test-only reference computations. Nothing here calls into the library's
// implementation paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double kPi = std::numbers::pi;

inline std::vector<double> sinusoid(double amp, double hz, double fs,
                                    std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * kPi * hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

// Analog Butterworth band-pass magnitude evaluated at the bilinear-prewarped
// frequency; equals the digital filter's magnitude exactly.
inline double butter_bandpass_mag(double f, double lo, double hi, int order,
                                  double fs) {
  auto warp = [fs](double hz) { return 2.0 * fs * std::tan(kPi * hz / fs); };
  const double w = warp(f), wl = warp(lo), wh = warp(hi);
  if (w == 0.0) return 0.0;
  const double w0sq = wl * wh;
  const double omega = (w * w - w0sq) / (w * (wh - wl));
  return 1.0 / std::sqrt(1.0 + std::pow(omega, 2 * order));
}

inline double butter_lowpass_mag(double f, double fc, int order, double fs) {
  auto warp = [fs](double hz) { return 2.0 * fs * std::tan(kPi * hz / fs); };
  const double omega = warp(f) / warp(fc);
  return 1.0 / std::sqrt(1.0 + std::pow(omega, 2 * order));
}

// Closed-form magnitude of the standard second-order digital notch.
inline double notch_mag(double f, double f0, double q, double fs) {
  const double w = 2.0 * kPi * f / fs, w0 = 2.0 * kPi * f0 / fs;
  const double beta = std::tan(w0 / q / 2.0);
  const double num = std::pow(std::cos(w) - std::cos(w0), 2);
  const double den = num + beta * beta * std::pow(std::sin(w), 2);
  return std::sqrt(num / den);
}

inline double rms(const std::vector<double>& x, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(to - from));
}

inline double mean_square(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

// Lag (in samples, |lag| <= max_lag) maximising the cross-correlation of a
// and b over the central window [from, to).
inline int peak_xcorr_lag(const std::vector<double>& a, const std::vector<double>& b,
                          std::size_t from, std::size_t to, int max_lag) {
  int best = 0;
  double best_val = -1e300;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) {
      const auto j = static_cast<std::ptrdiff_t>(i) + lag;
      s += a[i] * b[static_cast<std::size_t>(j)];
    }
    if (s > best_val) {
      best_val = s;
      best = lag;
    }
  }
  return best;
}

// Least-squares amplitude of a known-frequency sinusoid (plus offset) over
// [from, to).
inline double fit_amplitude(const std::vector<double>& x, double hz, double fs,
                            std::size_t from, std::size_t to) {
  double ss = 0, sc = 0, cc = 0, s1 = 0, c1 = 0, n = 0, xs = 0, xc = 0, x1 = 0;
  for (std::size_t i = from; i < to; ++i) {
    const double t = 2.0 * kPi * hz * static_cast<double>(i) / fs;
    const double s = std::sin(t), c = std::cos(t);
    ss += s * s; sc += s * c; cc += c * c; s1 += s; c1 += c; n += 1;
    xs += x[i] * s; xc += x[i] * c; x1 += x[i];
  }
  // Solve the 3x3 normal equations by Cramer's rule.
  const double m[3][3] = {{ss, sc, s1}, {sc, cc, c1}, {s1, c1, n}};
  const double r[3] = {xs, xc, x1};
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double d = det3(m);
  double sol[2];
  for (int k = 0; k < 2; ++k) {
    double mk[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mk[i][j] = (j == k) ? r[i] : m[i][j];
    sol[k] = det3(mk) / d;
  }
  return std::hypot(sol[0], sol[1]);
}

// 95th percentile with linear interpolation between order statistics,
// computed by full sort.
inline double percentile_by_sort(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
