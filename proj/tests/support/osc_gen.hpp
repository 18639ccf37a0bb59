#pragma once

#include <bit>
#include <cstdint>
#include <random>
#include <string>

#include "geeg/osc.hpp"

namespace oracle {

// Random well-formed OSC packets for round-trip properties. Floats come from
// raw bit patterns so NaN payloads and denormals are covered too.
class OscGenerator {
 public:
  explicit OscGenerator(std::uint64_t seed) : rng_(seed) {}

  geeg::osc::Message message() {
    std::string address;
    const int parts = pick(1, 4);
    for (int p = 0; p < parts; ++p) address += "/" + text(1, 9);
    std::vector<geeg::osc::Arg> args;
    const int n = pick(0, 8);
    for (int i = 0; i < n; ++i) {
      switch (pick(0, 3)) {
        case 0: args.emplace_back(static_cast<std::int32_t>(rng_())); break;
        case 1: args.emplace_back(std::bit_cast<float>(static_cast<std::uint32_t>(rng_()))); break;
        case 2: args.emplace_back(text(0, 13)); break;
        default: {
          geeg::osc::Blob b(static_cast<std::size_t>(pick(0, 11)));
          for (auto& byte : b) byte = static_cast<std::uint8_t>(rng_());
          args.emplace_back(std::move(b));
        }
      }
    }
    return geeg::osc::Message::make(std::move(address), std::move(args));
  }

  geeg::osc::Packet packet(int depth = 0) {
    if (depth >= 3 || pick(0, 2) != 0) return message();
    geeg::osc::Bundle b;
    b.time_tag = rng_();
    const int n = pick(0, 4);
    for (int i = 0; i < n; ++i) b.elements.push_back(packet(depth + 1));
    return b;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::string text(int lo, int hi) {
    static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789_";
    std::string s(static_cast<std::size_t>(pick(lo, hi)), 'a');
    for (auto& c : s) c = alphabet[pick(0, sizeof(alphabet) - 2)];
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace oracle
