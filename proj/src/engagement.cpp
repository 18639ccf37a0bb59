#include "geeg/engagement.hpp"

#include <cmath>
#include <map>
#include <string>

#include "geeg/csv.hpp"
#include "geeg/error.hpp"
#include "geeg/format.hpp"

namespace geeg {
namespace {

constexpr std::array<std::string_view, kBandCount> kBandTitles{"Delta", "Theta", "Alpha",
                                                               "Beta", "Gamma"};

double field_double(const std::vector<std::string>& row, std::size_t col) {
  if (row[col].empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto v = parse_double(row[col]);
  if (!v) throw Error(ErrorCode::FileLoad, "bad number '" + row[col] + "'");
  return *v;
}

}  // namespace

double faa(double alpha_tp9, double alpha_af7, double alpha_af8, double alpha_tp10) {
  if (!(alpha_tp9 > 0.0 && alpha_af7 > 0.0 && alpha_af8 > 0.0 && alpha_tp10 > 0.0)) {
    throw Error(ErrorCode::NonPositivePower, "FAA needs four positive alpha powers");
  }
  const double left = 0.5 * (alpha_tp9 + alpha_af7);
  const double right = 0.5 * (alpha_af8 + alpha_tp10);
  return std::log(right) - std::log(left);
}

double faa(const BandPowerTable& t) {
  return faa(t.power(Channel::TP9, Band::Alpha), t.power(Channel::AF7, Band::Alpha),
             t.power(Channel::AF8, Band::Alpha), t.power(Channel::TP10, Band::Alpha));
}

std::string_view faa_interpretation(double v) noexcept {
  if (v > 0.0) return "relatively greater left-frontal activation (approach tendency)";
  if (v < 0.0) return "relatively greater right-frontal activation (withdrawal tendency)";
  return "no frontal asymmetry";
}

double arousal(double beta_mean, double alpha_mean) {
  if (!(alpha_mean > 0.0)) {
    throw Error(ErrorCode::ZeroAlpha, "arousal index needs alpha power > 0");
  }
  if (beta_mean < 0.0) {
    throw Error(ErrorCode::NonPositivePower, "beta power is negative");
  }
  return beta_mean / alpha_mean;
}

double arousal(const BandPowerTable& t) { return arousal(t.mean(Band::Beta), t.mean(Band::Alpha)); }

double baseline_correct(double task_value, double eo_value) noexcept {
  return task_value - eo_value;
}

double baseline_correct(const SubjectValue& task, const SubjectValue& eo) {
  if (task.subject_id != eo.subject_id) {
    throw Error(ErrorCode::SubjectMismatch,
                "task value from '" + task.subject_id + "' vs baseline from '" +
                    eo.subject_id + "'");
  }
  return baseline_correct(task.value, eo.value);
}

std::vector<double> zscore_within_subject(const std::vector<KeyedValue>& values) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < values.size(); ++i) groups[values[i].subject_id].push_back(i);

  std::vector<double> out(values.size());
  for (const auto& [subject, idx] : groups) {
    const auto n = static_cast<double>(idx.size());
    if (idx.size() < 2) {
      throw Error(ErrorCode::DegenerateSpread,
                  "subject '" + subject + "' has fewer than 2 values");
    }
    double mean = 0.0;
    for (auto i : idx) mean += values[i].value;
    mean /= n;
    double ss = 0.0;
    for (auto i : idx) ss += (values[i].value - mean) * (values[i].value - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw Error(ErrorCode::DegenerateSpread, "subject '" + subject + "' has zero spread");
    }
    for (auto i : idx) out[i] = (values[i].value - mean) / sd;
  }
  return out;
}

BaselineRecord make_baseline(const BandPowerTable& eo, std::optional<BandPowerTable> ec) {
  BaselineRecord b;
  b.subject_id = eo.subject_id;
  b.eo = eo;
  b.ec = std::move(ec);
  b.eo_faa = faa(eo);
  b.eo_arousal = arousal(eo);
  return b;
}

EngagementRecord build_engagement_record(const BandPowerTable& table,
                                         const BaselineRecord& baseline,
                                         const ConditionLabel& condition) {
  if (table.subject_id != baseline.subject_id) {
    throw Error(ErrorCode::SubjectMismatch,
                "segment '" + table.segment_id + "' of '" + table.subject_id +
                    "' paired with baseline of '" + baseline.subject_id + "'");
  }
  validate(condition);
  EngagementRecord r;
  r.subject_id = table.subject_id;
  r.segment_id = table.segment_id;
  r.condition = condition;
  r.faa = faa(table);
  r.faa_minus_eo = baseline_correct(r.faa, baseline.eo_faa);
  r.arousal = arousal(table);
  r.arousal_minus_eo = baseline_correct(r.arousal, baseline.eo_arousal);
  for (std::size_t b = 0; b < kBandCount; ++b) {
    r.band_mean[b] = table.channel_mean[b];
    r.band_corrected[b] = baseline_correct(table.channel_mean[b], baseline.eo.channel_mean[b]);
  }
  r.alpha_fraction = relative_band_fraction(table, Band::Alpha);
  r.valid_samples = table.valid_sample_count;
  return r;
}

std::vector<std::string> apply_z_pass(std::vector<EngagementRecord>& records) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[records[i].subject_id].push_back(i);

  std::vector<std::string> warnings;
  for (const auto& [subject, idx] : groups) {
    for (std::size_t b = 0; b < kBandCount; ++b) {
      std::vector<KeyedValue> values;
      for (auto i : idx) {
        values.push_back({subject, records[i].segment_id, records[i].band_corrected[b]});
      }
      try {
        const auto z = zscore_within_subject(values);
        for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].band_corrected_z[b] = z[k];
      } catch (const Error& e) {
        for (auto i : idx) records[i].band_corrected_z[b] = EngagementRecord::kUnset;
        warnings.push_back(band_column(static_cast<Band>(b), "_Mean_Corrected_Z") + ": " +
                           e.what());
      }
    }
  }
  return warnings;
}

std::string band_column(Band b, std::string_view suffix) {
  return std::string(kBandTitles[index(b)]) + std::string(suffix);
}

std::vector<std::string> records_csv_header() {
  std::vector<std::string> h{"subject_id", "segment_id", "condition", "modality", "block",
                             "posture", "FAA", "FAA_Corrected", "Arousal_Index",
                             "Arousal_Index_Corrected"};
  for (auto suffix : {"_Mean", "_Mean_Corrected", "_Mean_Corrected_Z"}) {
    for (std::size_t b = 0; b < kBandCount; ++b) {
      h.push_back(band_column(static_cast<Band>(b), suffix));
    }
  }
  h.push_back("Relative_Alpha_Fraction");
  h.push_back("valid_samples");
  return h;
}

std::vector<std::string> records_csv_row(const EngagementRecord& r) {
  std::vector<std::string> row{r.subject_id,
                               r.segment_id,
                               format_label(r.condition),
                               std::string(to_string(r.condition.modality)),
                               std::to_string(r.condition.block),
                               std::string(to_string(r.condition.posture)),
                               format_double(r.faa),
                               format_double(r.faa_minus_eo),
                               format_double(r.arousal),
                               format_double(r.arousal_minus_eo)};
  for (const auto* arr : {&r.band_mean, &r.band_corrected, &r.band_corrected_z}) {
    for (double v : *arr) row.push_back(format_double(v));
  }
  row.push_back(format_double(r.alpha_fraction));
  row.push_back(std::to_string(r.valid_samples));
  return row;
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<EngagementRecord>& records) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(records_csv_row(r));
  csv::write_file(path, records_csv_header(), rows);
}

std::vector<EngagementRecord> read_records_csv(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const auto header = records_csv_header();
  std::vector<std::size_t> col(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) col[i] = table.column(header[i]);

  std::vector<EngagementRecord> out;
  for (const auto& row : table.rows) {
    if (row.size() < table.header.size()) {
      throw Error(ErrorCode::FileLoad, path.string() + ": short row");
    }
    EngagementRecord r;
    r.subject_id = row[col[0]];
    r.segment_id = row[col[1]];
    const auto label = parse_label(row[col[2]]);
    const auto* cond = std::get_if<ConditionLabel>(&label);
    if (!cond) {
      throw Error(ErrorCode::FileLoad, path.string() + ": baseline label in records file");
    }
    r.condition = *cond;
    r.faa = field_double(row, col[6]);
    r.faa_minus_eo = field_double(row, col[7]);
    r.arousal = field_double(row, col[8]);
    r.arousal_minus_eo = field_double(row, col[9]);
    std::size_t k = 10;
    for (auto* arr : {&r.band_mean, &r.band_corrected, &r.band_corrected_z}) {
      for (auto& v : *arr) v = field_double(row, col[k++]);
    }
    r.alpha_fraction = field_double(row, col[k++]);
    r.valid_samples = static_cast<std::size_t>(field_double(row, col[k]));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace geeg
