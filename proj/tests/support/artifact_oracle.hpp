#pragma once

// Brute-force re-statement of the sample exclusion rules, written straight
// from the criteria without sharing code with the library.

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "geeg/types.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct FlagSets {
  // bit 0 device, 1 movement, 2 amplitude, 3 gradient; [sample][channel]
  std::vector<std::vector<int>> bits;
  std::size_t valid_samples = 0;
  bool accepted = false;
};

inline FlagSets brute_force_flags(const geeg::Segment& seg, std::size_t min_valid = 100) {
  const std::size_t n = seg.frames.size();
  FlagSets out;
  out.bits.assign(n, std::vector<int>(4, 0));

  std::vector<double> accel;
  for (const auto& f : seg.frames) {
    if (f.accel_mag) accel.push_back(*f.accel_mag);
  }
  const double p95 = percentile_by_sort(accel, 95.0);

  for (std::size_t i = 0; i < n; ++i) {
    // movement: latest frame at or before i that has accel
    bool moving = false;
    for (std::size_t j = i + 1; j-- > 0;) {
      if (seg.frames[j].accel_mag) {
        moving = *seg.frames[j].accel_mag > p95;
        break;
      }
    }
    for (std::size_t c = 0; c < 4; ++c) {
      int b = 0;
      if (seg.frames[i].device_quality[c] == geeg::Quality::Poor) b |= 1;
      if (moving) b |= 2;
      if (std::abs(seg.frames[i].eeg[c]) > 100.0) b |= 4;
      if (i > 0 && std::abs(seg.frames[i].eeg[c] - seg.frames[i - 1].eeg[c]) > 50.0) b |= 8;
      out.bits[i][c] = b;
    }
  }
  for (const auto& row : out.bits) {
    if (row[0] == 0 && row[1] == 0 && row[2] == 0 && row[3] == 0) ++out.valid_samples;
  }
  out.accepted = !(out.valid_samples < min_valid);
  return out;
}

// Noisy segment with scattered device flags, accel gaps, and values sitting
// exactly on the amplitude and gradient thresholds.
inline geeg::Segment random_artifact_segment(std::uint64_t seed, std::size_t n = 1000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eeg(0.0, 45.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  geeg::Segment seg;
  seg.id = "rand";
  seg.sample_rate = 256.0;
  seg.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& f = seg.frames[i];
    f.t_ref = static_cast<double>(i) / 256.0;
    for (std::size_t c = 0; c < 4; ++c) {
      const double r = u(rng);
      if (r < 0.01) {
        f.eeg[c] = u(rng) < 0.5 ? 100.0 : -100.0;
      } else if (r < 0.02 && i > 0) {
        f.eeg[c] = seg.frames[i - 1].eeg[c] + (u(rng) < 0.5 ? 50.0 : -50.0);
      } else {
        f.eeg[c] = eeg(rng);
      }
      f.device_quality[c] = u(rng) < 0.03 ? geeg::Quality::Poor : geeg::Quality::Good;
    }
    if (u(rng) < 0.96) f.accel_mag = 9.81 + 0.3 * eeg(rng) / 45.0;
  }
  seg.frames[0].accel_mag = 9.81;
  return seg;
}

}  // namespace oracle
