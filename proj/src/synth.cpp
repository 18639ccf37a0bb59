#include "geeg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "geeg/error.hpp"

namespace geeg::synth {
namespace {

void sort_unique(std::vector<std::size_t>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

void validate(const GeneratorSpec& spec) {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
  if (!(spec.duration_s > 0.0) || !std::isfinite(spec.duration_s)) bad("duration must be positive");
  if (!(spec.sample_rate > 0.0) || !std::isfinite(spec.sample_rate)) bad("sample_rate must be positive");
  if (!(spec.noise_std_uv >= 0.0)) bad("noise std must be >= 0");
  for (const auto& ch : spec.amplitudes) {
    for (double a : ch) {
      if (!(a >= 0.0) || !std::isfinite(a)) bad("band amplitudes must be finite and >= 0");
    }
  }
  for (const auto& s : spec.artifacts.spikes) {
    if (s.channel >= kChannelCount) bad("spike channel out of range");
    if (s.t_s < 0.0 || s.t_s >= spec.duration_s) bad("spike outside the segment");
  }
  for (const auto& b : spec.artifacts.blinks) {
    if (!(b.duration_s > 0.0)) bad("blink duration must be positive");
  }
  for (const auto& m : spec.artifacts.movements) {
    if (!(m.duration_s > 0.0) || m.accel_peak < 0.0 || m.eeg_noise_uv < 0.0) bad("bad movement burst");
  }
  for (double f : kBandCentreHz) {
    if (f >= spec.sample_rate / 2.0) bad("sample rate too low for the gamma centre frequency");
  }
}

Generated generate(const GeneratorSpec& spec) {
  validate(spec);
  const double fs = spec.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
  std::mt19937_64 rng(spec.seed);
  std::mt19937_64 phase_rng(spec.phase_seed.value_or(spec.seed ^ 0x5bd1e995u));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::array<std::array<double, kBandCount>, kChannelCount> phi{};
  for (auto& ch : phi) {
    for (auto& p : ch) p = phase(phase_rng);
  }

  Generated out;
  out.segment.sample_rate = fs;
  out.segment.label = spec.label;
  out.segment.frames.resize(n);
  out.accel_xyz.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = spec.t0_s + static_cast<double>(i) / fs;
    auto& f = out.segment.frames[i];
    f.t_ref = t;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      double x = 0.0;
      for (std::size_t b = 0; b < kBandCount; ++b) {
        x += spec.amplitudes[c][b] * std::sin(2.0 * std::numbers::pi * kBandCentreHz[b] * t + phi[c][b]);
      }
      if (spec.noise_std_uv > 0.0) x += spec.noise_std_uv * gauss(rng);
      f.eeg[c] = x;
    }
    double az = spec.accel_baseline;
    if (spec.accel_noise > 0.0) az += spec.accel_noise * gauss(rng);
    out.accel_xyz[i] = {0.0, 0.0, az};
  }

  auto index_of = [&](double t_s) {
    return std::min(n - 1, static_cast<std::size_t>(std::llround(t_s * fs)));
  };

  for (const auto& m : spec.artifacts.movements) {
    const std::size_t start = index_of(m.t_s);
    const auto len = static_cast<std::size_t>(std::llround(m.duration_s * fs));
    for (std::size_t i = start; i < std::min(n, start + len); ++i) {
      const double u = static_cast<double>(i - start) / static_cast<double>(len);
      out.accel_xyz[i][0] += m.accel_peak * std::sin(std::numbers::pi * u);
      for (auto& v : out.segment.frames[i].eeg) v += m.eeg_noise_uv * gauss(rng);
      out.truth.movement_samples.push_back(i);
    }
  }

  for (const auto& b : spec.artifacts.blinks) {
    const std::size_t start = index_of(b.t_s);
    const auto len = static_cast<std::size_t>(std::llround(b.duration_s * fs));
    for (std::size_t i = start; i < std::min(n, start + len); ++i) {
      const double u = static_cast<double>(i - start) / static_cast<double>(len);
      const double w = b.amplitude_uv * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * u));
      auto& e = out.segment.frames[i].eeg;
      e[index(Channel::AF7)] += w;
      e[index(Channel::AF8)] += w;
      e[index(Channel::TP9)] += 0.1 * w;
      e[index(Channel::TP10)] += 0.1 * w;
      out.truth.blink_samples.push_back(i);
    }
  }

  for (const auto& s : spec.artifacts.spikes) {
    const std::size_t i = index_of(s.t_s);
    auto& x = out.segment.frames[i].eeg[s.channel];
    x += s.amplitude_uv;
    if (std::abs(x) > 100.0) out.truth.amplitude_artifacts[s.channel].push_back(i);
    const double before = i > 0 ? out.segment.frames[i - 1].eeg[s.channel] : x;
    const double after = i + 1 < n ? out.segment.frames[i + 1].eeg[s.channel] : x;
    if (i > 0 && std::abs(x - before) > 50.0) out.truth.gradient_artifacts[s.channel].push_back(i);
    if (i + 1 < n && std::abs(after - x) > 50.0) out.truth.gradient_artifacts[s.channel].push_back(i + 1);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = out.accel_xyz[i];
    out.segment.frames[i].accel_mag = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  }

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    sort_unique(out.truth.amplitude_artifacts[c]);
    sort_unique(out.truth.gradient_artifacts[c]);
    for (std::size_t b = 0; b < kBandCount; ++b) {
      const double a = spec.amplitudes[c][b];
      out.truth.band_power[c][b] = 0.5 * a * a;
      out.truth.channel_mean[b] += 0.5 * a * a / static_cast<double>(kChannelCount);
    }
  }
  sort_unique(out.truth.blink_samples);
  sort_unique(out.truth.movement_samples);
  return out;
}

BandAmplitudes amplitudes_for(const std::array<double, kBandCount>& powers, double faa) {
  BandAmplitudes a{};
  const std::size_t alpha = index(Band::Alpha);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (std::size_t b = 0; b < kBandCount; ++b) {
      if (powers[b] < 0.0) throw Error(ErrorCode::InvalidSpec, "band power must be >= 0");
      a[c][b] = std::sqrt(2.0 * powers[b]);
    }
  }
  // Left alpha p·2/(1+e^faa), right p·2e^faa/(1+e^faa): the mean is kept
  // and ln(right/left) = faa.
  const double left = 2.0 * powers[alpha] / (1.0 + std::exp(faa));
  const double right = left * std::exp(faa);
  for (Channel c : {Channel::TP9, Channel::AF7}) a[index(c)][alpha] = std::sqrt(2.0 * left);
  for (Channel c : {Channel::AF8, Channel::TP10}) a[index(c)][alpha] = std::sqrt(2.0 * right);
  return a;
}

}  // namespace geeg::synth
