#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "geeg/decode.hpp"
#include "geeg/error.hpp"
#include "geeg/osc.hpp"
#include "support/expect.hpp"
#include "support/osc_gen.hpp"

using namespace geeg;
using Bytes = std::vector<std::uint8_t>;

namespace {

Bytes ascii(std::string_view s) { return Bytes(s.begin(), s.end()); }

Bytes cat(std::initializer_list<Bytes> parts) {
  Bytes out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// "/muse/eeg" ,ffff 10 11 12 13, written out by hand.
const Bytes kEegMessage = cat({
    ascii(std::string_view("/muse/eeg\0\0\0", 12)),
    ascii(std::string_view(",ffff\0\0\0", 8)),
    {0x41, 0x20, 0x00, 0x00},
    {0x41, 0x30, 0x00, 0x00},
    {0x41, 0x40, 0x00, 0x00},
    {0x41, 0x50, 0x00, 0x00},
});

// "/muse/acc" ,fff 0 0 1
const Bytes kAccMessage = cat({
    ascii(std::string_view("/muse/acc\0\0\0", 12)),
    ascii(std::string_view(",fff", 4)),
    {0, 0, 0, 0},
    {0, 0, 0, 0},
    {0, 0, 0, 0},
    {0x3f, 0x80, 0x00, 0x00},
});

Bytes be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::size_t parse_error_offset(const Bytes& b) {
  try {
    (void)osc::parse_packet(b);
  } catch (const OscParseError& e) {
    return e.offset();
  }
  FAIL("expected a parse error");
  return 0;
}

}  // namespace

TEST_CASE("hand-encoded eeg message", "[osc]") {
  const auto msgs = osc::parse_packet(kEegMessage);
  REQUIRE(msgs.size() == 1);
  const auto& m = msgs[0];
  CHECK(m.address == "/muse/eeg");
  CHECK(m.type_tags == ",ffff");
  REQUIRE(m.args.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::get<float>(m.args[i]) == 10.0f + i);
  CHECK(m.time_tag == osc::kImmediate);

  const auto built = osc::Message::make("/muse/eeg", {10.0f, 11.0f, 12.0f, 13.0f});
  CHECK(osc::serialize(built) == kEegMessage);
}

TEST_CASE("hand-encoded bundle shares its time tag", "[osc]") {
  const std::uint64_t tag = 0x0000000a80000000ull;  // 10.5 s
  const Bytes bundle = cat({ascii(std::string_view("#bundle\0", 8)), be32(tag >> 32), be32(tag & 0xffffffff),
                            be32(kEegMessage.size()), kEegMessage, be32(kAccMessage.size()), kAccMessage});
  const auto msgs = osc::parse_packet(bundle);
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].address == "/muse/eeg");
  CHECK(msgs[1].address == "/muse/acc");
  CHECK(msgs[0].time_tag == tag);
  CHECK(msgs[1].time_tag == tag);
  CHECK(osc::from_time_tag(tag) == 10.5);
  CHECK(osc::serialize(osc::parse(bundle)) == bundle);
}

TEST_CASE("nested bundles carry the innermost time tag", "[osc]") {
  osc::Bundle inner{osc::to_time_tag(3.25), {osc::Message::make("/a", {std::int32_t{1}})}};
  osc::Bundle outer{osc::to_time_tag(1.0), {osc::Message::make("/b", {}), inner}};
  const auto msgs = osc::parse_packet(osc::serialize(osc::Packet{outer}));
  REQUIRE(msgs.size() == 2);
  CHECK(msgs[0].time_tag == osc::to_time_tag(1.0));
  CHECK(msgs[1].time_tag == osc::to_time_tag(3.25));
}

TEST_CASE("malformed datagrams report a byte offset", "[osc]") {
  CHECK_THROWS_CODE(osc::parse_packet(Bytes{'/', 'a', 0}), ErrorCode::MalformedPacket);
  CHECK(parse_error_offset(Bytes{'/', 'a', 0}) == 3);
  CHECK_THROWS_CODE(osc::parse_packet(Bytes{}), ErrorCode::MalformedPacket);

  // Truncated argument: drop the last float.
  Bytes truncated(kEegMessage.begin(), kEegMessage.end() - 4);
  CHECK(parse_error_offset(truncated) == truncated.size());

  // Non-zero padding after the address.
  Bytes bad_pad = kEegMessage;
  bad_pad[11] = 'x';
  CHECK(parse_error_offset(bad_pad) == 11);

  // Unknown type tag.
  Bytes bad_tag = kEegMessage;
  bad_tag[13] = 'q';
  CHECK(parse_error_offset(bad_tag) == 13);

  // Extra trailing argument bytes.
  Bytes trailing = cat({kEegMessage, {0, 0, 0, 0}});
  CHECK(parse_error_offset(trailing) == kEegMessage.size());

  // Address without a leading slash.
  Bytes no_slash = kEegMessage;
  no_slash[0] = 'm';
  CHECK(parse_error_offset(no_slash) == 0);

  // Bundle element size running past the end.
  const Bytes overrun = cat({ascii(std::string_view("#bundle\0", 8)), be32(0), be32(1), be32(64), kAccMessage});
  CHECK(parse_error_offset(overrun) == 16);
}

TEST_CASE("serialize after parse is the identity", "[osc][property]") {
  oracle::OscGenerator gen(11);
  for (int i = 0; i < 3000; ++i) {
    const auto bytes = osc::serialize(gen.packet());
    REQUIRE(bytes.size() % 4 == 0);
    REQUIRE(osc::serialize(osc::parse(bytes)) == bytes);
  }
}

TEST_CASE("time tag conversion", "[osc]") {
  CHECK(osc::to_time_tag(0.0) == 0);
  CHECK(osc::to_time_tag(1.5) == 0x0000000180000000ull);
  for (double t : {0.001, 12.345678, 98765.4321}) {
    CHECK(std::abs(osc::from_time_tag(osc::to_time_tag(t)) - t) < 1e-9);
  }
  CHECK_THROWS_CODE(osc::to_time_tag(-1.0), ErrorCode::InvalidSpec);
}

TEST_CASE("decode_frame maps the default addresses", "[decode]") {
  AddressMap map;
  DecodeCounters counters;
  const auto eeg = decode_frame(osc::parse_packet(kEegMessage)[0], map, &counters);
  REQUIRE(eeg);
  const auto& f = std::get<EegFragment>(*eeg);
  CHECK(f.uv == std::array<double, 4>{10, 11, 12, 13});

  const auto acc = decode_frame(osc::Message::make("/muse/acc", {3.0f, 4.0f, 12.0f}), map, &counters);
  CHECK(std::get<AccelFragment>(*acc).magnitude == 13.0);

  const auto q = decode_frame(osc::Message::make("/muse/elements/horseshoe", {1.0f, 2.0f, 4.0f, 3.0f}),
                              map, &counters);
  const auto& qf = std::get<QualityFragment>(*q).quality;
  CHECK(qf == std::array<Quality, 4>{Quality::Good, Quality::Good, Quality::Poor, Quality::Poor});

  const auto q1 = decode_frame(osc::Message::make("/muse/elements/horseshoe", {4.0f}), map, &counters);
  CHECK(std::get<QualityFragment>(*q1).quality[3] == Quality::Poor);

  CHECK_FALSE(decode_frame(osc::Message::make("/muse/elements/alpha_absolute", {0.5f}), map, &counters));
  CHECK(counters.decoded == 4);
  CHECK(counters.unmapped == 1);

  CHECK_THROWS_CODE(decode_frame(osc::Message::make("/muse/eeg", {1.0f, 2.0f}), map), ErrorCode::ArityMismatch);
  CHECK_THROWS_CODE(decode_frame(osc::Message::make("/muse/acc", {1.0f, 2.0f, std::string("x")}), map),
                    ErrorCode::InvalidFrame);
}
