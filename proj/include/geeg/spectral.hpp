#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geeg/artifact.hpp"
#include "geeg/types.hpp"

namespace geeg {

enum class Band : std::size_t { Delta = 0, Theta, Alpha, Beta, Gamma };

inline constexpr std::size_t kBandCount = 5;

struct BandDefinition {
  Band band;
  std::string_view name;
  double low_hz;
  double high_hz;
};

// delta 0.5-4, theta 4-8, alpha 8-13, beta 13-30, gamma 30-50 Hz. The gamma
// upper edge coincides with the front-end cutoff, so gamma covers 30-50 Hz
// only; adjacent bands share their -3 dB edge.
inline constexpr std::array<BandDefinition, kBandCount> kCanonicalBands{{
    {Band::Delta, "delta", 0.5, 4.0},
    {Band::Theta, "theta", 4.0, 8.0},
    {Band::Alpha, "alpha", 8.0, 13.0},
    {Band::Beta, "beta", 13.0, 30.0},
    {Band::Gamma, "gamma", 30.0, 50.0},
}};

constexpr std::size_t index(Band b) noexcept { return static_cast<std::size_t>(b); }
constexpr const BandDefinition& band_definition(Band b) noexcept {
  return kCanonicalBands[index(b)];
}
Band parse_band(std::string_view name);

struct SpectralConfig {
  int band_order = 4;
  std::size_t min_valid = 100;
};

// Zero-phase Butterworth band isolation, then mean squared amplitude over
// samples that are valid and outside the filter edge region.
double band_power(std::span<const double> x, const BandDefinition& band, double fs,
                  const std::vector<bool>& valid_mask, const SpectralConfig& config = {});

struct BandPowerTable {
  std::string subject_id;
  std::string segment_id;
  std::string condition;  // label text, see format_label
  std::array<std::array<double, kBandCount>, kChannelCount> per_channel{};  // µV²
  std::array<double, kBandCount> channel_mean{};                           // µV²
  std::size_t valid_sample_count = 0;

  double power(Channel c, Band b) const { return per_channel[index(c)][index(b)]; }
  double mean(Band b) const { return channel_mean[index(b)]; }
};

// Applies band_power per channel and band using all-channel sample validity.
BandPowerTable segment_band_powers(const Segment& seg, const QualityMask& mask,
                                   const SpectralConfig& config = {});

// Recomputes channel_mean from per_channel.
void update_channel_mean(BandPowerTable& table);

double relative_band_fraction(const BandPowerTable& table, Band band);

// One CSV row per segment: segment_id, condition, then TP9_delta ..
// TP9_gamma, AF7_delta .. TP10_gamma (channel-major), then mean_delta ..
// mean_gamma.
std::vector<std::string> band_power_csv_header();
std::vector<std::string> band_power_csv_row(const BandPowerTable& table);

}  // namespace geeg
