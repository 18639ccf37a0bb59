#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "geeg/artifact.hpp"
#include "geeg/engagement.hpp"
#include "geeg/error.hpp"
#include "geeg/filter.hpp"
#include "geeg/spectral.hpp"
#include "geeg/synth.hpp"
#include "support/expect.hpp"

using namespace geeg;
using namespace geeg::synth;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

QualityMask all_valid(std::size_t n) { return QualityMask(n); }

BandAmplitudes uniform(double a) {
  BandAmplitudes amp{};
  for (auto& ch : amp) ch.fill(a);
  return amp;
}

}  // namespace

TEST_CASE("alpha-only spec has analytic power", "[synth]") {
  GeneratorSpec spec;
  for (auto& ch : spec.amplitudes) ch[index(Band::Alpha)] = 20.0;
  const auto g = generate(spec);
  CHECK(g.segment.size() == 2560);
  CHECK(g.truth.channel_mean[index(Band::Alpha)] == 200.0);
  CHECK(g.truth.channel_mean[index(Band::Beta)] == 0.0);
  // Mean square of the generated signal is A²/2 over whole cycles.
  double ms = 0.0;
  for (const auto& f : g.segment.frames) ms += f.eeg[0] * f.eeg[0];
  CHECK_THAT(ms / 2560.0, WithinRel(200.0, 1e-3));
  for (const auto& f : g.segment.frames) CHECK(*f.accel_mag == 9.81);
}

TEST_CASE("scheduled spike is listed as an amplitude artifact", "[synth]") {
  GeneratorSpec spec;
  spec.artifacts.spikes.push_back({2.0, 1, 150.0});
  const auto g = generate(spec);
  CHECK(g.truth.amplitude_artifacts[1] == std::vector<std::size_t>{512});
  CHECK(g.truth.gradient_artifacts[1] == std::vector<std::size_t>{512, 513});
  CHECK(g.truth.amplitude_artifacts[0].empty());
  CHECK(g.segment.frames[512].eeg[1] == 150.0);
}

TEST_CASE("same seed gives identical output", "[synth]") {
  GeneratorSpec spec;
  spec.amplitudes = uniform(5.0);
  spec.noise_std_uv = 3.0;
  spec.seed = 99;
  spec.artifacts.movements.push_back({1.0, 0.5, 4.0, 30.0});
  const auto a = generate(spec), b = generate(spec);
  REQUIRE(a.segment.size() == b.segment.size());
  for (std::size_t i = 0; i < a.segment.size(); ++i) {
    REQUIRE(a.segment.frames[i].eeg == b.segment.frames[i].eeg);
    REQUIRE(a.accel_xyz[i] == b.accel_xyz[i]);
  }
  spec.seed = 100;
  CHECK(generate(spec).segment.frames[10].eeg != a.segment.frames[10].eeg);
}

TEST_CASE("shared phase seed joins pieces without a seam", "[synth]") {
  GeneratorSpec whole;
  whole.amplitudes = uniform(10.0);
  whole.phase_seed = 5;
  whole.duration_s = 2.0;
  GeneratorSpec tail = whole;
  tail.t0_s = 1.0;
  tail.duration_s = 1.0;
  const auto w = generate(whole), t = generate(tail);
  for (std::size_t i = 0; i < t.segment.size(); ++i) {
    REQUIRE_THAT(t.segment.frames[i].eeg[2], WithinAbs(w.segment.frames[256 + i].eeg[2], 1e-9));
  }
}

TEST_CASE("invalid specs are rejected", "[synth]") {
  GeneratorSpec spec;
  spec.duration_s = 0.0;
  CHECK_THROWS_CODE(generate(spec), ErrorCode::InvalidSpec);
  spec = {};
  spec.amplitudes[0][0] = -1.0;
  CHECK_THROWS_CODE(generate(spec), ErrorCode::InvalidSpec);
  spec = {};
  spec.sample_rate = 64.0;  // 40 Hz above Nyquist
  CHECK_THROWS_CODE(generate(spec), ErrorCode::InvalidSpec);
  spec = {};
  spec.artifacts.spikes.push_back({0.5, 7, 100.0});
  CHECK_THROWS_CODE(generate(spec), ErrorCode::InvalidSpec);
}

TEST_CASE("amplitudes_for hits powers and FAA", "[synth]") {
  const std::array<double, kBandCount> p{30, 20, 50, 100, 5};
  const auto a = amplitudes_for(p, 0.4);
  GeneratorSpec spec;
  spec.amplitudes = a;
  const auto g = generate(spec);
  for (std::size_t b = 0; b < kBandCount; ++b) CHECK_THAT(g.truth.channel_mean[b], WithinRel(p[b], 1e-12));
  const auto& bp = g.truth.band_power;
  const std::size_t al = index(Band::Alpha);
  CHECK_THAT(faa(bp[0][al], bp[1][al], bp[2][al], bp[3][al]), WithinAbs(0.4, 1e-12));
}

TEST_CASE("band powers of clean generated segments match ground truth", "[synth][oracle]") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> amp(2.0, 25.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GeneratorSpec spec;
    for (auto& ch : spec.amplitudes) {
      for (auto& a : ch) a = amp(rng);
    }
    spec.seed = seed;
    const auto g = generate(spec);
    const auto table = segment_band_powers(g.segment, all_valid(g.segment.size()));
    for (std::size_t b = 0; b < kBandCount; ++b) {
      INFO("seed " << seed << " band " << b);
      REQUIRE_THAT(table.channel_mean[b], WithinRel(g.truth.channel_mean[b], 0.10));
    }
  }
}

TEST_CASE("injected spikes are recalled with few false flags", "[synth][artifact]") {
  std::size_t injected = 0, recalled = 0, clean_cells = 0, false_flags = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> when(0.2, 9.8), size(120.0, 250.0);
    std::uniform_int_distribution<std::size_t> ch(0, kChannelCount - 1);
    std::bernoulli_distribution sign(0.5);
    GeneratorSpec spec;
    spec.amplitudes = uniform(8.0);
    spec.noise_std_uv = 3.0;
    spec.seed = seed;
    for (int k = 0; k < 20; ++k) spec.artifacts.spikes.push_back({when(rng), ch(rng), (sign(rng) ? 1 : -1) * size(rng)});
    const auto g = generate(spec);

    const std::vector<QualityMask> masks{flag_amplitude(preprocess(g.segment)), flag_gradient(g.segment)};
    const auto mask = combine_and_validate(masks).mask;
    std::vector<std::array<bool, kChannelCount>> truth(g.segment.size());
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      for (auto i : g.truth.amplitude_artifacts[c]) truth[i][c] = true;
      for (auto i : g.truth.gradient_artifacts[c]) truth[i][c] = true;
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (truth[i][c]) {
          ++injected;
          recalled += mask.valid(i, c) ? 0 : 1;
        } else {
          ++clean_cells;
          false_flags += mask.valid(i, c) ? 0 : 1;
        }
      }
    }
  }
  INFO("recalled " << recalled << "/" << injected << ", false " << false_flags << "/" << clean_cells);
  CHECK(static_cast<double>(recalled) >= 0.99 * static_cast<double>(injected));
  CHECK(static_cast<double>(false_flags) < 0.01 * static_cast<double>(clean_cells));
}

TEST_CASE("movement bursts raise the accelerometer only inside the burst", "[synth]") {
  GeneratorSpec spec;
  spec.amplitudes = uniform(5.0);
  spec.artifacts.movements.push_back({4.0, 1.0, 6.0, 40.0});
  const auto g = generate(spec);
  const auto mask = flag_movement(g.segment);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.valid(i, 0)) REQUIRE(std::binary_search(g.truth.movement_samples.begin(), g.truth.movement_samples.end(), i));
  }
  CHECK(g.truth.movement_samples.size() == 256);
}
