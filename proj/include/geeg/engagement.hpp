#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geeg/spectral.hpp"
#include "geeg/types.hpp"

namespace geeg {

// ln(mean(AF8, TP10)) - ln(mean(TP9, AF7)) on alpha powers.
// Throws NonPositivePower unless all four are > 0.
double faa(double alpha_tp9, double alpha_af7, double alpha_af8, double alpha_tp10);
double faa(const BandPowerTable& table);

// Positive FAA (more right alpha) reads as relatively greater left-frontal
// activation, i.e. an approach tendency.
std::string_view faa_interpretation(double faa_value) noexcept;

// beta_mean / alpha_mean. Throws ZeroAlpha when alpha_mean <= 0.
double arousal(double beta_mean, double alpha_mean);
double arousal(const BandPowerTable& table);

struct SubjectValue {
  std::string subject_id;
  double value = 0.0;
};

double baseline_correct(double task_value, double eo_value) noexcept;
// Throws SubjectMismatch when the values belong to different subjects.
double baseline_correct(const SubjectValue& task, const SubjectValue& eo);

struct KeyedValue {
  std::string subject_id;
  std::string segment_id;
  double value = 0.0;
};

// (v - mean) / sd per subject, sd with n - 1. Output order follows input.
// Throws DegenerateSpread for a subject with < 2 values or zero spread.
std::vector<double> zscore_within_subject(const std::vector<KeyedValue>& values);

struct BaselineRecord {
  std::string subject_id;
  BandPowerTable eo;
  std::optional<BandPowerTable> ec;  // descriptive only
  double eo_faa = 0.0;
  double eo_arousal = 0.0;
};

BaselineRecord make_baseline(const BandPowerTable& eo,
                             std::optional<BandPowerTable> ec = std::nullopt);

struct EngagementRecord {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  std::string subject_id;
  std::string segment_id;
  ConditionLabel condition;
  double faa = 0.0;
  double faa_minus_eo = 0.0;
  double arousal = 0.0;
  double arousal_minus_eo = 0.0;
  std::array<double, kBandCount> band_mean{};       // µV²
  std::array<double, kBandCount> band_corrected{};  // task minus EO, µV²
  std::array<double, kBandCount> band_corrected_z{kUnset, kUnset, kUnset, kUnset, kUnset};
  double alpha_fraction = 0.0;
  std::size_t valid_samples = 0;
};

// Everything except band_corrected_z, which needs the subject's full set.
EngagementRecord build_engagement_record(const BandPowerTable& table,
                                         const BaselineRecord& baseline,
                                         const ConditionLabel& condition);

// Fills band_corrected_z per subject over that subject's records. A subject
// whose values cannot be standardised keeps NaN for that band; one message
// per such case is returned.
std::vector<std::string> apply_z_pass(std::vector<EngagementRecord>& records);

// Record CSV: subject_id, segment_id, condition, modality, block, posture,
// FAA, FAA_Corrected, Arousal_Index, Arousal_Index_Corrected,
// <Band>_Mean, <Band>_Mean_Corrected, <Band>_Mean_Corrected_Z (Delta ..
// Gamma each), Relative_Alpha_Fraction, valid_samples. NaN is written as an
// empty field.
std::vector<std::string> records_csv_header();
std::vector<std::string> records_csv_row(const EngagementRecord& r);
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<EngagementRecord>& records);
std::vector<EngagementRecord> read_records_csv(const std::filesystem::path& path);

// Column name for a band metric, e.g. ("Theta", "_Mean_Corrected_Z").
std::string band_column(Band b, std::string_view suffix);

}  // namespace geeg
