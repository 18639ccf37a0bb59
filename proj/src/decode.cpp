#include "geeg/decode.hpp"

#include <cmath>
#include <string>

#include "geeg/error.hpp"

namespace geeg {
namespace {

double numeric(const osc::Message& msg, std::size_t i) {
  const auto& a = msg.args[i];
  if (const auto* f = std::get_if<float>(&a)) return *f;
  if (const auto* n = std::get_if<std::int32_t>(&a)) return *n;
  throw Error(ErrorCode::InvalidFrame,
              msg.address + " argument " + std::to_string(i) + " is not numeric");
}

void expect_arity(const osc::Message& msg, std::size_t want) {
  if (msg.args.size() != want) {
    throw Error(ErrorCode::ArityMismatch, msg.address + " expects " + std::to_string(want) +
                                              " arguments, got " +
                                              std::to_string(msg.args.size()));
  }
}

}  // namespace

std::optional<Fragment> decode_frame(const osc::Message& msg, const AddressMap& map,
                                     DecodeCounters* counters) {
  std::optional<Fragment> out;
  if (msg.address == map.eeg) {
    expect_arity(msg, kChannelCount);
    EegFragment f;
    for (std::size_t c = 0; c < kChannelCount; ++c) f.uv[c] = numeric(msg, c);
    out = f;
  } else if (msg.address == map.accel) {
    expect_arity(msg, 3);
    AccelFragment f;
    for (std::size_t k = 0; k < 3; ++k) f.xyz[k] = numeric(msg, k);
    f.magnitude = std::sqrt(f.xyz[0] * f.xyz[0] + f.xyz[1] * f.xyz[1] + f.xyz[2] * f.xyz[2]);
    out = f;
  } else if (msg.address == map.quality) {
    if (msg.args.size() != 1) expect_arity(msg, kChannelCount);
    QualityFragment f;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const double v = numeric(msg, msg.args.size() == 1 ? 0 : c);
      f.quality[c] = v > map.poor_above ? Quality::Poor : Quality::Good;
    }
    out = f;
  }
  if (counters) {
    if (out) {
      ++counters->decoded;
    } else {
      ++counters->unmapped;
    }
  }
  return out;
}

}  // namespace geeg
