#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace geeg::osc {

using Blob = std::vector<std::uint8_t>;
using Arg = std::variant<std::int32_t, float, std::string, Blob>;

// NTP 32.32 fixed point; the value 1 means "immediately".
inline constexpr std::uint64_t kImmediate = 1;

std::uint64_t to_time_tag(double seconds);
double from_time_tag(std::uint64_t tag);

struct Message {
  std::string address;    // starts with '/'
  std::string type_tags;  // starts with ','; one of i f s b per argument
  std::vector<Arg> args;
  std::uint64_t time_tag = kImmediate;  // of the innermost enclosing bundle
  std::string source;                   // "host:port" of the sender
  double t_arrival = 0.0;               // reference-clock seconds

  // Builds a message and derives type_tags from the arguments.
  static Message make(std::string address, std::vector<Arg> args);
};

struct Bundle;
using Packet = std::variant<Message, Bundle>;

struct Bundle {
  std::uint64_t time_tag = kImmediate;
  std::vector<Packet> elements;
};

// OSC 1.0 encoding. Strings and blobs are zero-padded to 4 bytes.
std::vector<std::uint8_t> serialize(const Packet& packet);
std::vector<std::uint8_t> serialize(const Message& message);

// Decodes a datagram, keeping the bundle structure. Throws OscParseError
// (MalformedPacket) with the byte offset of the first bad byte.
Packet parse(std::span<const std::uint8_t> bytes);

// Flattens a datagram into its messages. Each message carries the time tag
// of its innermost bundle.
std::vector<Message> parse_packet(std::span<const std::uint8_t> bytes);

}  // namespace geeg::osc
