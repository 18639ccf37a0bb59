#include "geeg/osc.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "geeg/error.hpp"

namespace geeg::osc {
namespace {

constexpr std::string_view kBundleTag{"#bundle\0", 8};
constexpr int kMaxDepth = 32;

std::size_t padded(std::size_t n) { return (n + 3) & ~std::size_t{3}; }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
  put_u32(out, static_cast<std::uint32_t>(v));
}

void put_string(std::vector<std::uint8_t>& out, std::string_view s) {
  out.insert(out.end(), s.begin(), s.end());
  const std::size_t total = padded(s.size() + 1);
  out.resize(out.size() + (total - s.size()), 0);
}

void put_blob(std::vector<std::uint8_t>& out, const Blob& b) {
  put_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
  out.resize(out.size() + (padded(b.size()) - b.size()), 0);
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t base)
      : bytes_(bytes), base_(base) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw OscParseError(base_ + at, what);
  }

  std::uint32_t u32() {
    if (remaining() < 4) fail("truncated 32-bit field", pos_);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    const std::uint64_t hi = u32();
    return (hi << 32) | u32();
  }

  std::string str() {
    const std::size_t start = pos_;
    std::size_t end = start;
    while (end < bytes_.size() && bytes_[end] != 0) ++end;
    if (end == bytes_.size()) fail("unterminated string", start);
    const std::size_t total = padded(end - start + 1);
    if (start + total > bytes_.size()) fail("truncated string padding", end);
    for (std::size_t i = end; i < start + total; ++i) {
      if (bytes_[i] != 0) fail("non-zero string padding", i);
    }
    pos_ = start + total;
    return std::string(reinterpret_cast<const char*>(bytes_.data() + start), end - start);
  }

  Blob blob() {
    const std::size_t at = pos_;
    const std::uint32_t n = u32();
    if (n > remaining() || padded(n) > remaining()) fail("truncated blob", at);
    Blob b(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
           bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    for (std::size_t i = pos_ + n; i < pos_ + padded(n); ++i) {
      if (bytes_[i] != 0) fail("non-zero blob padding", i);
    }
    pos_ += padded(n);
    return b;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) fail("truncated bundle element", pos_);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

bool is_bundle(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kBundleTag.data(), 8) == 0;
}

Message parse_message(std::span<const std::uint8_t> bytes, std::size_t base) {
  Reader r(bytes, base);
  Message m;
  m.address = r.str();
  if (m.address.empty() || m.address[0] != '/') r.fail("address must start with '/'", 0);
  if (r.done()) r.fail("missing type tag string", r.pos());
  const std::size_t tag_at = r.pos();
  m.type_tags = r.str();
  if (m.type_tags.empty() || m.type_tags[0] != ',') r.fail("type tags must start with ','", tag_at);
  for (std::size_t i = 1; i < m.type_tags.size(); ++i) {
    switch (m.type_tags[i]) {
      case 'i': m.args.emplace_back(static_cast<std::int32_t>(r.u32())); break;
      case 'f': m.args.emplace_back(std::bit_cast<float>(r.u32())); break;
      case 's': m.args.emplace_back(r.str()); break;
      case 'b': m.args.emplace_back(r.blob()); break;
      default:
        r.fail(std::string("unsupported type tag '") + m.type_tags[i] + "'", tag_at + i);
    }
  }
  if (!r.done()) r.fail("trailing bytes after arguments", r.pos());
  return m;
}

Packet parse_at(std::span<const std::uint8_t> bytes, std::size_t base, int depth) {
  if (bytes.empty()) throw OscParseError(base, "empty packet");
  if (bytes.size() % 4 != 0) {
    throw OscParseError(base + bytes.size(), "packet length is not a multiple of 4");
  }
  if (!is_bundle(bytes)) return parse_message(bytes, base);
  if (depth > kMaxDepth) throw OscParseError(base, "bundles nested too deeply");

  Reader r(bytes, base);
  r.take(8);
  Bundle b;
  b.time_tag = r.u64();
  while (!r.done()) {
    const std::size_t at = r.pos();
    const std::uint32_t size = r.u32();
    if (size == 0 || size % 4 != 0) r.fail("bundle element size must be a positive multiple of 4", at);
    if (size > r.remaining()) r.fail("bundle element overruns packet", at);
    const std::size_t element_at = r.pos();
    b.elements.push_back(parse_at(r.take(size), base + element_at, depth + 1));
  }
  return b;
}

void flatten(Packet& p, std::uint64_t tag, std::vector<Message>& out) {
  if (auto* m = std::get_if<Message>(&p)) {
    m->time_tag = tag;
    out.push_back(std::move(*m));
    return;
  }
  auto& b = std::get<Bundle>(p);
  for (auto& e : b.elements) flatten(e, b.time_tag, out);
}

void append(std::vector<std::uint8_t>& out, const Packet& p);

void append_message(std::vector<std::uint8_t>& out, const Message& m) {
  if (m.address.empty() || m.address[0] != '/') {
    throw Error(ErrorCode::MalformedPacket, "address must start with '/'");
  }
  if (m.type_tags.size() != m.args.size() + 1 || m.type_tags[0] != ',') {
    throw Error(ErrorCode::MalformedPacket, "type tags do not match arguments");
  }
  put_string(out, m.address);
  put_string(out, m.type_tags);
  for (std::size_t i = 0; i < m.args.size(); ++i) {
    const char tag = m.type_tags[i + 1];
    const auto& a = m.args[i];
    if (tag == 'i' && std::holds_alternative<std::int32_t>(a)) {
      put_u32(out, static_cast<std::uint32_t>(std::get<std::int32_t>(a)));
    } else if (tag == 'f' && std::holds_alternative<float>(a)) {
      put_u32(out, std::bit_cast<std::uint32_t>(std::get<float>(a)));
    } else if (tag == 's' && std::holds_alternative<std::string>(a)) {
      put_string(out, std::get<std::string>(a));
    } else if (tag == 'b' && std::holds_alternative<Blob>(a)) {
      put_blob(out, std::get<Blob>(a));
    } else {
      throw Error(ErrorCode::MalformedPacket,
                  std::string("argument ") + std::to_string(i) + " does not match tag '" + tag + "'");
    }
  }
}

void append(std::vector<std::uint8_t>& out, const Packet& p) {
  if (const auto* m = std::get_if<Message>(&p)) {
    append_message(out, *m);
    return;
  }
  const auto& b = std::get<Bundle>(p);
  out.insert(out.end(), kBundleTag.begin(), kBundleTag.end());
  put_u64(out, b.time_tag);
  for (const auto& e : b.elements) {
    const std::size_t size_at = out.size();
    put_u32(out, 0);
    append(out, e);
    const auto size = static_cast<std::uint32_t>(out.size() - size_at - 4);
    for (int i = 0; i < 4; ++i) {
      out[size_at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(size >> (24 - 8 * i));
    }
  }
}

}  // namespace

std::uint64_t to_time_tag(double seconds) {
  if (!(seconds >= 0.0) || seconds >= 4294967296.0) {
    throw Error(ErrorCode::InvalidSpec, "time outside the OSC time tag range");
  }
  const double whole = std::floor(seconds);
  auto frac = static_cast<std::uint64_t>(std::llround((seconds - whole) * 4294967296.0));
  auto secs = static_cast<std::uint64_t>(whole);
  if (frac >= (std::uint64_t{1} << 32)) {
    frac = 0;
    ++secs;
  }
  return (secs << 32) | frac;
}

double from_time_tag(std::uint64_t tag) {
  return static_cast<double>(tag >> 32) +
         static_cast<double>(tag & 0xffffffffu) / 4294967296.0;
}

Message Message::make(std::string address, std::vector<Arg> args) {
  Message m;
  m.address = std::move(address);
  m.type_tags = ",";
  for (const auto& a : args) {
    static constexpr char tags[] = {'i', 'f', 's', 'b'};
    m.type_tags += tags[a.index()];
  }
  m.args = std::move(args);
  return m;
}

std::vector<std::uint8_t> serialize(const Packet& packet) {
  std::vector<std::uint8_t> out;
  append(out, packet);
  return out;
}

std::vector<std::uint8_t> serialize(const Message& message) {
  std::vector<std::uint8_t> out;
  append_message(out, message);
  return out;
}

Packet parse(std::span<const std::uint8_t> bytes) { return parse_at(bytes, 0, 0); }

std::vector<Message> parse_packet(std::span<const std::uint8_t> bytes) {
  Packet p = parse(bytes);
  std::vector<Message> out;
  flatten(p, kImmediate, out);
  return out;
}

}  // namespace geeg::osc
