#include "geeg/spectral.hpp"

#include <numeric>
#include <string>

#include "geeg/error.hpp"
#include "geeg/filter.hpp"
#include "geeg/format.hpp"

namespace geeg {

Band parse_band(std::string_view name) {
  for (const auto& def : kCanonicalBands) {
    if (def.name == name) return def.band;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown band '" + std::string(name) + "'");
}

double band_power(std::span<const double> x, const BandDefinition& band, double fs,
                  const std::vector<bool>& valid_mask, const SpectralConfig& config) {
  if (valid_mask.size() != x.size()) {
    throw Error(ErrorCode::ShapeMismatch, "validity mask length differs from signal");
  }
  const auto filter = design_bandpass(band.low_hz, band.high_hz, config.band_order, fs);
  const std::size_t edge = filter.pad_length();

  std::size_t usable = 0;
  for (std::size_t i = edge; i + edge < x.size(); ++i) usable += valid_mask[i] ? 1 : 0;
  if (usable < config.min_valid) {
    throw Error(ErrorCode::TooFewValidSamples,
                std::string(band.name) + " power needs >= " +
                    std::to_string(config.min_valid) + " valid samples, got " +
                    std::to_string(usable));
  }

  const auto y = apply_zero_phase(filter, x);
  double sum = 0.0;
  for (std::size_t i = edge; i + edge < y.size(); ++i) {
    if (valid_mask[i]) sum += y[i] * y[i];
  }
  return sum / static_cast<double>(usable);
}

void update_channel_mean(BandPowerTable& table) {
  for (std::size_t b = 0; b < kBandCount; ++b) {
    double s = 0.0;
    for (std::size_t c = 0; c < kChannelCount; ++c) s += table.per_channel[c][b];
    table.channel_mean[b] = s / static_cast<double>(kChannelCount);
  }
}

BandPowerTable segment_band_powers(const Segment& seg, const QualityMask& mask,
                                   const SpectralConfig& config) {
  if (mask.size() != seg.size()) {
    throw Error(ErrorCode::ShapeMismatch, "quality mask does not match segment");
  }
  BandPowerTable table;
  table.segment_id = seg.id;
  table.condition = format_label(seg.label);
  const auto valid = mask.sample_validity();

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto x = channel_samples(seg, static_cast<Channel>(c));
    for (const auto& def : kCanonicalBands) {
      table.per_channel[c][index(def.band)] =
          band_power(x, def, seg.sample_rate, valid, config);
    }
  }
  const std::size_t edge =
      design_bandpass(kCanonicalBands[0].low_hz, kCanonicalBands[0].high_hz,
                      config.band_order, seg.sample_rate)
          .pad_length();
  for (std::size_t i = edge; i + edge < valid.size(); ++i) {
    table.valid_sample_count += valid[i] ? 1 : 0;
  }
  update_channel_mean(table);
  return table;
}

double relative_band_fraction(const BandPowerTable& table, Band band) {
  const double total =
      std::accumulate(table.channel_mean.begin(), table.channel_mean.end(), 0.0);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::ZeroTotalPower, "band powers sum to zero");
  }
  return table.mean(band) / total;
}

std::vector<std::string> band_power_csv_header() {
  std::vector<std::string> h{"segment_id", "condition"};
  for (auto ch : kChannelNames) {
    for (const auto& def : kCanonicalBands) {
      h.push_back(std::string(ch) + "_" + std::string(def.name));
    }
  }
  for (const auto& def : kCanonicalBands) h.push_back("mean_" + std::string(def.name));
  return h;
}

std::vector<std::string> band_power_csv_row(const BandPowerTable& table) {
  std::vector<std::string> row{table.segment_id, table.condition};
  for (const auto& ch : table.per_channel) {
    for (double v : ch) row.push_back(format_double(v));
  }
  for (double v : table.channel_mean) row.push_back(format_double(v));
  return row;
}

}  // namespace geeg
