#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "geeg/engagement.hpp"
#include "geeg/error.hpp"
#include "support/expect.hpp"

using namespace geeg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BandPowerTable table_with(const std::string& subject, const std::string& segment,
                          std::array<double, kBandCount> per_band) {
  BandPowerTable t;
  t.subject_id = subject;
  t.segment_id = segment;
  for (auto& ch : t.per_channel) ch = per_band;
  update_channel_mean(t);
  t.valid_sample_count = 1000;
  return t;
}

// Mean and n-1 standard deviation, written out directly.
std::pair<double, double> mean_sd(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  const long double m = s / v.size();
  long double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {static_cast<double>(m), static_cast<double>(std::sqrt(ss / (v.size() - 1)))};
}

}  // namespace

TEST_CASE("FAA examples", "[engagement]") {
  CHECK(faa(10, 10, 10, 10) == 0.0);
  const double e = std::numbers::e;
  CHECK_THAT(faa(4.0, 6.0, 5.0 * e, 5.0 * e), WithinAbs(1.0, 1e-15));
  CHECK_THROWS_CODE(faa(0, 10, 10, 10), ErrorCode::NonPositivePower);
  CHECK_THROWS_CODE(faa(10, 10, -1, 10), ErrorCode::NonPositivePower);
  CHECK_THROWS_CODE(faa(10, 10, 10, std::nan("")), ErrorCode::NonPositivePower);
}

TEST_CASE("FAA antisymmetry and scale invariance", "[engagement][property]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 500.0);
  std::uniform_real_distribution<double> k(1e-3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double tp9 = u(rng), af7 = u(rng), af8 = u(rng), tp10 = u(rng);
    const double f = faa(tp9, af7, af8, tp10);
    REQUIRE(faa(af8, tp10, tp9, af7) == -f);
    const double s = k(rng);
    REQUIRE_THAT(faa(s * tp9, s * af7, s * af8, s * tp10), WithinAbs(f, 1e-12));
  }
}

TEST_CASE("FAA sign reads as approach for more right alpha", "[engagement]") {
  const double v = faa(5, 5, 8, 8);
  REQUIRE(v > 0.0);
  CHECK(faa_interpretation(v) ==
        "relatively greater left-frontal activation (approach tendency)");
  CHECK(faa_interpretation(-v) ==
        "relatively greater right-frontal activation (withdrawal tendency)");
}

TEST_CASE("arousal index", "[engagement]") {
  CHECK(arousal(7.5, 7.5) == 1.0);
  CHECK(arousal(30, 10) == 3.0);
  CHECK_THROWS_CODE(arousal(30, 0), ErrorCode::ZeroAlpha);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 500.0);
  std::uniform_real_distribution<double> k(1e-3, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double b = u(rng), a = u(rng), s = k(rng);
    REQUIRE_THAT(arousal(s * b, s * a), WithinRel(arousal(b, a), 1e-12));
    REQUIRE(arousal(b, a) > 0.0);
  }
}

TEST_CASE("baseline correction", "[engagement]") {
  CHECK(baseline_correct(0.3, 0.3) == 0.0);
  CHECK(baseline_correct(12.0, 9.0) == 3.0);
  CHECK(baseline_correct(SubjectValue{"p1", 12.0}, SubjectValue{"p1", 9.0}) == 3.0);
  CHECK_THROWS_CODE(baseline_correct(SubjectValue{"p1", 1.0}, SubjectValue{"p2", 1.0}),
                    ErrorCode::SubjectMismatch);
}

TEST_CASE("zscore_within_subject", "[engagement]") {
  const auto z = zscore_within_subject({{"s", "a", 1}, {"s", "b", 2}, {"s", "c", 3}});
  CHECK_THAT(z[0], WithinAbs(-1.0, 1e-15));
  CHECK_THAT(z[1], WithinAbs(0.0, 1e-15));
  CHECK_THAT(z[2], WithinAbs(1.0, 1e-15));
  CHECK_THROWS_CODE(zscore_within_subject({{"s", "a", 5}, {"s", "b", 5}, {"s", "c", 5}}),
                    ErrorCode::DegenerateSpread);
  CHECK_THROWS_CODE(zscore_within_subject({{"s", "a", 5}}), ErrorCode::DegenerateSpread);

  // Interleaved subjects are standardised independently.
  const std::vector<KeyedValue> mixed{{"x", "1", 10}, {"y", "1", -3}, {"x", "2", 14},
                                      {"y", "2", 9},  {"x", "3", 30}, {"y", "3", 0}};
  const auto zm = zscore_within_subject(mixed);
  for (const char* who : {"x", "y"}) {
    std::vector<double> zs;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      if (mixed[i].subject_id == who) zs.push_back(zm[i]);
    }
    const auto [m, sd] = mean_sd(zs);
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::abs(sd - 1.0) < 1e-12);
  }
}

TEST_CASE("engagement record against its baseline", "[engagement]") {
  const auto eo = table_with("p7", "eo", {12, 8, 20, 10, 3});
  const auto baseline = make_baseline(eo);
  CHECK(baseline.eo_faa == 0.0);
  CHECK(baseline.eo_arousal == 0.5);
  const auto cond = ConditionLabel::make(Modality::ImmersiveProjection, 2);

  const auto same = build_engagement_record(table_with("p7", "t1", {12, 8, 20, 10, 3}),
                                            baseline, cond);
  CHECK(same.faa_minus_eo == 0.0);
  CHECK(same.arousal_minus_eo == 0.0);
  for (double v : same.band_corrected) CHECK(v == 0.0);
  CHECK(std::isnan(same.band_corrected_z[0]));

  const auto doubled = build_engagement_record(table_with("p7", "t2", {12, 8, 40, 10, 3}),
                                               baseline, cond);
  CHECK_THAT(doubled.band_corrected[index(Band::Alpha)], WithinRel(20.0, 1e-12));
  CHECK_THAT(doubled.arousal, WithinRel(baseline.eo_arousal / 2.0, 1e-12));
  CHECK_THAT(doubled.alpha_fraction, WithinRel(40.0 / 73.0, 1e-12));
  CHECK(doubled.condition.posture == Posture::Seated);

  CHECK_THROWS_CODE(build_engagement_record(table_with("p8", "t", {1, 1, 1, 1, 1}),
                                            baseline, cond),
                    ErrorCode::SubjectMismatch);
}

TEST_CASE("Z pass standardises each subject and band", "[engagement][property]") {
  std::mt19937_64 rng(5);
  for (int cohort = 0; cohort < 25; ++cohort) {
    std::normal_distribution<double> scale(1.0, 0.7);
    std::vector<EngagementRecord> records;
    const int subjects = 10;
    for (int s = 0; s < subjects; ++s) {
      const double gain = std::exp(scale(rng));
      const auto eo = table_with("p" + std::to_string(s), "eo",
                                 {10 * gain, 6 * gain, 9 * gain, 5 * gain, 1 * gain});
      const auto baseline = make_baseline(eo);
      std::uniform_int_distribution<int> count(2, 9);
      std::lognormal_distribution<double> jitter(0.0, 0.4);
      const int n = count(rng);
      for (int k = 0; k < n; ++k) {
        std::array<double, kBandCount> p{};
        for (std::size_t b = 0; b < kBandCount; ++b) p[b] = eo.channel_mean[b] * jitter(rng);
        const auto modality = static_cast<Modality>(k % 3);
        records.push_back(build_engagement_record(
            table_with(eo.subject_id, "t" + std::to_string(k), p), baseline,
            ConditionLabel::make(modality, 1 + k % 3)));
      }
    }
    std::shuffle(records.begin(), records.end(), rng);
    const auto warnings = apply_z_pass(records);
    REQUIRE(warnings.empty());
    for (int s = 0; s < subjects; ++s) {
      for (std::size_t b = 0; b < kBandCount; ++b) {
        std::vector<double> z;
        for (const auto& r : records) {
          if (r.subject_id == "p" + std::to_string(s)) z.push_back(r.band_corrected_z[b]);
        }
        const auto [m, sd] = mean_sd(z);
        REQUIRE(std::abs(m) < 1e-10);
        REQUIRE(std::abs(sd - 1.0) < 1e-10);
      }
    }
  }
}

TEST_CASE("Z pass leaves unstandardisable subjects unset", "[engagement]") {
  const auto eo = table_with("solo", "eo", {1, 1, 1, 1, 1});
  const auto baseline = make_baseline(eo);
  std::vector<EngagementRecord> records{build_engagement_record(
      table_with("solo", "t", {2, 2, 2, 2, 2}), baseline,
      ConditionLabel::make(Modality::OriginalArtwork, 1))};
  const auto warnings = apply_z_pass(records);
  CHECK(warnings.size() == kBandCount);
  for (double z : records[0].band_corrected_z) CHECK(std::isnan(z));
}

TEST_CASE("records CSV round trip", "[engagement]") {
  const auto eo = table_with("p1", "eo", {12, 8, 20, 10, 3});
  const auto baseline = make_baseline(eo);
  std::vector<EngagementRecord> records;
  for (int k = 0; k < 3; ++k) {
    records.push_back(build_engagement_record(
        table_with("p1", "t" + std::to_string(k), {12.0 + k, 8.0 * (k + 1), 20.0 / (k + 1), 10.0 - k, 3.3 + k * k}),
        baseline, ConditionLabel::make(Modality::DisplayVideo, k + 1)));
  }
  apply_z_pass(records);
  const auto header = records_csv_header();
  CHECK(header[6] == "FAA");
  CHECK(header[9] == "Arousal_Index_Corrected");
  CHECK(header[10] == "Delta_Mean");
  CHECK(header[20] == "Delta_Mean_Corrected_Z");
  CHECK(header[21] == "Theta_Mean_Corrected_Z");
  CHECK(header[25] == "Relative_Alpha_Fraction");

  const auto path = std::filesystem::temp_directory_path() / "geeg_records_rt.csv";
  write_records_csv(path, records);
  const auto back = read_records_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].subject_id == records[i].subject_id);
    CHECK(back[i].condition == records[i].condition);
    CHECK(back[i].faa == records[i].faa);
    CHECK(back[i].arousal_minus_eo == records[i].arousal_minus_eo);
    CHECK(back[i].band_corrected_z == records[i].band_corrected_z);
    CHECK(back[i].alpha_fraction == records[i].alpha_fraction);
    CHECK(back[i].valid_samples == records[i].valid_samples);
  }
}
