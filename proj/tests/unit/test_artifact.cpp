#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "geeg/artifact.hpp"
#include "geeg/error.hpp"
#include "geeg/filter.hpp"
#include "support/artifact_oracle.hpp"
#include "support/expect.hpp"
#include "support/oracles.hpp"
#include "support/segments.hpp"

using namespace geeg;
using testing_support::constant_segment;
using testing_support::make_segment;

namespace {

ValidationOutcome full_validation(const Segment& seg) {
  const std::vector<QualityMask> masks{flag_device(seg), flag_movement(seg),
                                       flag_amplitude(seg), flag_gradient(seg)};
  return combine_and_validate(masks);
}

std::vector<double> band_noise(std::mt19937_64& rng, std::size_t n, double lo, double hi,
                               double rms) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = g(rng);
  auto y = apply_zero_phase(design_bandpass(lo, hi, 4, 256.0), w);
  const double scale = rms / std::sqrt(oracle::mean_square(y));
  for (auto& v : y) v *= scale;
  return y;
}

Segment mix(const std::vector<std::vector<double>>& sources, const Eigen::Matrix4d& a) {
  const std::size_t n = sources[0].size();
  std::vector<std::vector<double>> ch(4, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        ch[c][i] += a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) * sources[k][i];
      }
    }
  }
  auto seg = make_segment(ch);
  for (auto& f : seg.frames) f.accel_mag = 9.81;
  return seg;
}

double relative_frobenius(const Segment& a, const Eigen::Matrix<double, 4, Eigen::Dynamic>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double d = a.frames[i].eeg[c] -
                       b(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
      num += d * d;
      den += a.frames[i].eeg[c] * a.frames[i].eeg[c];
    }
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("flag_device marks exactly the poor cells", "[artifact]") {
  auto seg = constant_segment(50);
  CHECK(flag_device(seg).flagged_count() == 0);

  seg.frames[7].device_quality[index(Channel::TP9)] = Quality::Poor;
  const auto one = flag_device(seg);
  CHECK(one.flagged_count() == 1);
  CHECK(one.has(7, index(Channel::TP9), FlagReason::DeviceFlag));

  std::mt19937_64 rng(3);
  std::bernoulli_distribution poor(0.2);
  std::size_t expected = 0;
  for (auto& f : seg.frames) {
    for (auto& q : f.device_quality) {
      q = poor(rng) ? Quality::Poor : Quality::Good;
      expected += q == Quality::Poor ? 1 : 0;
    }
  }
  CHECK(flag_device(seg).flagged_count() == expected);
}

TEST_CASE("flag_movement uses the in-segment 95th percentile", "[artifact]") {
  auto seg = constant_segment(100);
  for (auto& f : seg.frames) f.accel_mag = 9.81;
  CHECK(flag_movement(seg).flagged_count() == 0);

  std::vector<double> accel;
  for (std::size_t i = 0; i < 100; ++i) {
    seg.frames[i].accel_mag = static_cast<double>(i);
    accel.push_back(static_cast<double>(i));
  }
  const double p95 = oracle::percentile_by_sort(accel, 95.0);
  const auto mask = flag_movement(seg);
  std::size_t flagged_frames = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const bool expect = static_cast<double>(i) > p95;
    CHECK(mask.has(i, 0, FlagReason::Movement) == expect);
    CHECK(mask.sample_valid(i) == !expect);
    flagged_frames += expect ? 1 : 0;
  }
  CHECK(flagged_frames == 5);

  // A gap after a moving frame inherits its flag.
  seg.frames[98].accel_mag.reset();
  CHECK(flag_movement(seg).has(98, 2, FlagReason::Movement));

  auto bare = constant_segment(100);
  CHECK_THROWS_CODE(flag_movement(bare), ErrorCode::MissingAccelStream);
  for (std::size_t i = 0; i < 89; ++i) bare.frames[i].accel_mag = 1.0;
  CHECK_THROWS_CODE(flag_movement(bare), ErrorCode::MissingAccelStream);
  bare.frames[89].accel_mag = 1.0;
  CHECK_NOTHROW(flag_movement(bare));
}

TEST_CASE("flag_amplitude uses a strict threshold", "[artifact]") {
  auto seg = constant_segment(10);
  CHECK(flag_amplitude(seg).flagged_count() == 0);
  seg.frames[2].eeg[1] = 100.0;
  seg.frames[3].eeg[1] = -100.0;
  seg.frames[4].eeg[2] = -150.0;
  seg.frames[5].eeg[3] = 100.000001;
  const auto mask = flag_amplitude(seg);
  CHECK(mask.valid(2, 1));
  CHECK(mask.valid(3, 1));
  CHECK(mask.has(4, 2, FlagReason::Amplitude));
  CHECK(mask.has(5, 3, FlagReason::Amplitude));
  CHECK(mask.flagged_count() == 2);
}

TEST_CASE("flag_gradient uses a strict per-sample step threshold", "[artifact]") {
  auto seg = constant_segment(6);
  for (std::size_t c = 0; c < 4; ++c) seg.frames[3].eeg[c] = 60.0;
  seg.frames[4].eeg = {60.0, 60.0, 60.0, 60.0};
  seg.frames[5].eeg = {10.0, 10.0, 10.0, 10.0};  // step of exactly 50
  const auto mask = flag_gradient(seg);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(mask.has(3, c, FlagReason::Gradient));
    CHECK(mask.valid(4, c));
    CHECK(mask.valid(5, c));
    CHECK(mask.valid(0, c));
  }

  std::vector<double> ramp(300);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  CHECK(flag_gradient(make_segment({ramp, ramp, ramp, ramp})).flagged_count() == 0);

  CHECK_THROWS_CODE(flag_gradient(constant_segment(1)), ErrorCode::TooShortInput);
}

TEST_CASE("combine_and_validate gates at 100 all-channel valid samples", "[artifact]") {
  const std::vector<QualityMask> clean{QualityMask(200), QualityMask(200)};
  const auto ok = combine_and_validate(clean);
  CHECK(ok.accepted);
  CHECK(ok.valid_samples == 200);

  QualityMask a(150), b(150);
  for (std::size_t i = 0; i < 30; ++i) a.flag(i, 0, FlagReason::Amplitude);
  for (std::size_t i = 30; i < 51; ++i) b.flag(i, 3, FlagReason::Gradient);
  const std::vector<QualityMask> pair{a, b};
  const auto rejected = combine_and_validate(pair);
  CHECK(rejected.valid_samples == 99);
  CHECK_FALSE(rejected.accepted);

  b.reasons[50][3] = 0;
  const std::vector<QualityMask> pair2{a, b};
  const auto edge = combine_and_validate(pair2);
  CHECK(edge.valid_samples == 100);
  CHECK(edge.accepted);

  const std::vector<QualityMask> uneven{QualityMask(10), QualityMask(11)};
  CHECK_THROWS_CODE(combine_and_validate(uneven), ErrorCode::ShapeMismatch);
}

TEST_CASE("sample flags agree exactly with the brute-force oracle", "[artifact][oracle]") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto seg = oracle::random_artifact_segment(seed);
    const auto expected = oracle::brute_force_flags(seg);
    const auto got = full_validation(seg);
    INFO("seed " << seed);
    REQUIRE(got.mask.size() == seg.size());
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        mismatches += got.mask.reasons[i][c] != expected.bits[i][c] ? 1 : 0;
      }
    }
    CHECK(mismatches == 0);
    CHECK(got.valid_samples == expected.valid_samples);
    CHECK(got.accepted == expected.accepted);
  }
}

TEST_CASE("combined invalid set is the union of per-criterion sets", "[artifact][property]") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const auto seg = oracle::random_artifact_segment(seed);
    const std::vector<QualityMask> masks{flag_device(seg), flag_movement(seg),
                                         flag_amplitude(seg), flag_gradient(seg)};
    const auto combined = combine_and_validate(masks);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      bool any_invalid = false;
      for (const auto& m : masks) any_invalid = any_invalid || !m.sample_valid(i);
      REQUIRE(combined.mask.sample_valid(i) == !any_invalid);
      for (std::size_t c = 0; c < 4; ++c) {
        bool cell_invalid = false;
        for (const auto& m : masks) cell_invalid = cell_invalid || !m.valid(i, c);
        REQUIRE(combined.mask.valid(i, c) == !cell_invalid);
      }
    }
  }
}

TEST_CASE("adding a flag never clears another", "[artifact][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, 999);
  std::uniform_int_distribution<std::size_t> chan(0, 3);
  for (std::uint64_t seed = 300; seed < 320; ++seed) {
    const auto seg = oracle::random_artifact_segment(seed);
    std::vector<QualityMask> masks{flag_device(seg), flag_movement(seg),
                                   flag_amplitude(seg), flag_gradient(seg)};
    const auto before = combine_and_validate(masks).mask;

    masks[rng() % 4].flag(pick(rng), chan(rng), FlagReason::DeviceFlag);
    const auto after = combine_and_validate(masks).mask;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        if (!before.valid(i, c)) REQUIRE_FALSE(after.valid(i, c));
      }
    }

    // Marking an extra frame poor on the device only adds flags.
    auto seg2 = seg;
    const auto i = pick(rng), c = chan(rng);
    seg2.frames[i].device_quality[c] = Quality::Poor;
    const auto d0 = flag_device(seg), d1 = flag_device(seg2);
    for (std::size_t k = 0; k < seg.size(); ++k) {
      for (std::size_t ch = 0; ch < 4; ++ch) {
        if (!d0.valid(k, ch)) REQUIRE_FALSE(d1.valid(k, ch));
      }
    }
    CHECK_FALSE(d1.valid(i, c));
  }
}

TEST_CASE("percentile interpolates between order statistics", "[artifact]") {
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 50.0) == 2.5);
  CHECK(percentile({5.0}, 95.0) == 5.0);
  CHECK(percentile({3.0, 1.0, 2.0}, 100.0) == 3.0);
  CHECK_THROWS_CODE(percentile({}, 50.0), ErrorCode::TooShortInput);
}

TEST_CASE("ICA removes an injected blink component", "[artifact][ica]") {
  const std::size_t n = 256 * 20;
  std::mt19937_64 rng(21);
  std::vector<std::vector<double>> src{band_noise(rng, n, 4, 8, 8.0),
                                       band_noise(rng, n, 8, 13, 10.0),
                                       band_noise(rng, n, 13, 30, 5.0),
                                       std::vector<double>(n, 0.0)};
  // Raised-cosine blinks, 0.3 s wide.
  const std::size_t width = 77;
  for (double t : {2.5, 7.0, 11.5, 16.0}) {
    const auto start = static_cast<std::size_t>(t * 256.0);
    for (std::size_t k = 0; k < width; ++k) {
      src[3][start + k] =
          150.0 * 0.5 * (1.0 - std::cos(2.0 * oracle::kPi * static_cast<double>(k) / width));
    }
  }
  Eigen::Matrix4d a;
  a << 0.6, 0.5, 0.7, 0.10,
       0.8, 0.4, 0.5, 1.00,
       0.5, 0.9, 0.6, 0.95,
       0.7, 0.6, 0.4, 0.12;
  const auto seg = mix(src, a);

  const auto result = run_ica(seg);
  REQUIRE(result.removed.size() == 1);
  const auto& removed = result.assessments[result.removed[0]];
  CHECK(removed.criterion == "blink");
  CHECK(std::abs(removed.kurtosis) > 8.0);
  CHECK(removed.low_freq_fraction > 0.8);
  CHECK(removed.frontal_ratio > 2.0);

  const auto cleaned = apply_ica(seg, result);

  // Transient = channel minus its blink-free part, restricted below 4 Hz.
  std::vector<std::vector<double>> no_blink = src;
  no_blink[3].assign(n, 0.0);
  const auto clean_seg = mix(no_blink, a);
  const auto lowpass = design_lowpass(4.0, 4, 256.0);
  for (auto ch : {Channel::AF7, Channel::AF8}) {
    const auto before_x = channel_samples(seg, ch);
    const auto after_x = channel_samples(cleaned, ch);
    const auto ref = channel_samples(clean_seg, ch);
    std::vector<double> before_t(n), after_t(n);
    for (std::size_t i = 0; i < n; ++i) {
      before_t[i] = before_x[i] - ref[i];
      after_t[i] = after_x[i] - ref[i];
    }
    const double p_before = oracle::mean_square(apply_zero_phase(lowpass, before_t));
    const double p_after = oracle::mean_square(apply_zero_phase(lowpass, after_t));
    INFO(kChannelNames[index(ch)] << " transient power " << p_before << " -> " << p_after);
    CHECK(p_after <= 0.2 * p_before);
  }
}

TEST_CASE("ICA leaves a clean mixture untouched", "[artifact][ica]") {
  const std::size_t n = 256 * 10;
  std::vector<std::vector<double>> src{oracle::sinusoid(10.0, 6.0, 256.0, n),
                                       oracle::sinusoid(12.0, 10.5, 256.0, n, 0.3),
                                       oracle::sinusoid(6.0, 21.5, 256.0, n, 1.1),
                                       oracle::sinusoid(3.0, 40.0, 256.0, n, 2.0)};
  Eigen::Matrix4d a;
  a << 1.0, 0.3, 0.2, 0.1,
       0.4, 1.0, 0.3, 0.2,
       0.2, 0.5, 1.0, 0.4,
       0.1, 0.2, 0.6, 1.0;
  const auto seg = mix(src, a);
  const auto result = run_ica(seg);
  CHECK(result.removed.empty());
  for (const auto& c : result.assessments) CHECK(std::abs(c.kurtosis) < 8.0);

  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(result.mixing);
  CHECK(svd.singularValues()(0) / svd.singularValues()(3) < 1e8);
  CHECK(relative_frobenius(seg, result.reconstruct()) < 1e-6);
  const auto round = apply_ica(seg, result);
  for (std::size_t i = 0; i < n; i += 97) {
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(std::abs(round.frames[i].eeg[c] - seg.frames[i].eeg[c]) < 1e-6);
    }
  }
}

TEST_CASE("ICA rejects short segments and is seed-deterministic", "[artifact][ica]") {
  CHECK_THROWS_CODE(run_ica(constant_segment(100)), ErrorCode::TooShortInput);
  CHECK_THROWS_CODE(run_ica(constant_segment(1024, 1.0)), ErrorCode::DegenerateInput);

  std::mt19937_64 rng(5);
  const std::size_t n = 2048;
  std::vector<std::vector<double>> src{oracle::sinusoid(10.0, 6.0, 256.0, n),
                                       band_noise(rng, n, 8, 13, 10.0),
                                       oracle::sinusoid(6.0, 21.5, 256.0, n, 1.1),
                                       band_noise(rng, n, 30, 45, 4.0)};
  const auto seg = mix(src, Eigen::Matrix4d::Identity() + 0.3 * Eigen::Matrix4d::Ones());
  IcaOptions opt;
  opt.seed = 99;
  const auto r1 = run_ica(seg, opt);
  const auto r2 = run_ica(seg, opt);
  CHECK(r1.unmixing == r2.unmixing);
  CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("ICA removes nothing on clean Gaussian data", "[artifact][ica][property]") {
  int kept = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t n = 1024;
    std::vector<std::vector<double>> src{
        band_noise(rng, n, 1, 4, 6.0), band_noise(rng, n, 4, 8, 6.0),
        band_noise(rng, n, 8, 13, 10.0), band_noise(rng, n, 13, 30, 4.0)};
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix4d a;
    for (Eigen::Index r = 0; r < 4; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) a(r, c) = (r == c ? 1.0 : 0.0) + 0.3 * g(rng);
    }
    const auto seg = mix(src, a);
    IcaOptions opt;
    opt.seed = seed;
    try {
      kept += run_ica(seg, opt).removed.empty() ? 1 : 0;
    } catch (const Error& e) {
      // An unconverged decomposition leaves the segment as recorded.
      REQUIRE(e.code() == ErrorCode::IcaNotConverged);
      ++kept;
    }
  }
  CHECK(kept >= 95);
}
