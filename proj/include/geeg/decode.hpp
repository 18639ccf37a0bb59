#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include "geeg/osc.hpp"
#include "geeg/types.hpp"

namespace geeg {

// OSC addresses of the headband bridge. Defaults follow the Mind Monitor
// app: raw EEG in µV, accelerometer in g or m/s², and the "horseshoe"
// fit indicator (1 good, 2 medium, 4 bad).
struct AddressMap {
  std::string eeg = "/muse/eeg";
  std::string accel = "/muse/acc";
  std::string quality = "/muse/elements/horseshoe";
  double poor_above = 2.0;  // horseshoe values above this mark a channel poor
};

struct EegFragment {
  std::array<double, kChannelCount> uv{};  // TP9, AF7, AF8, TP10
};
struct AccelFragment {
  std::array<double, 3> xyz{};
  double magnitude = 0.0;
};
struct QualityFragment {
  std::array<Quality, kChannelCount> quality{};
};

using Fragment = std::variant<EegFragment, AccelFragment, QualityFragment>;

struct DecodeCounters {
  std::size_t decoded = 0;
  std::size_t unmapped = 0;
};

// Maps a message to a frame fragment; unmapped addresses return nullopt
// and bump counters.unmapped. Throws ArityMismatch when a mapped address
// carries the wrong number of arguments, InvalidFrame for non-numeric ones.
// A single quality value applies to all four channels.
std::optional<Fragment> decode_frame(const osc::Message& msg, const AddressMap& map,
                                     DecodeCounters* counters = nullptr);

}  // namespace geeg
