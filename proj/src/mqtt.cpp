#include "geeg/mqtt.hpp"

#include <algorithm>

#include "geeg/error.hpp"

namespace geeg::mqtt {
namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_str(Bytes& out, std::string_view s) {
  if (s.size() > 0xffff) throw Error(ErrorCode::Protocol, "mqtt string too long");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Cursor {
 public:
  explicit Cursor(const Bytes& b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>((b_[pos_] << 8) | b_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::string str() {
    const std::size_t n = u16();
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  Bytes rest() {
    Bytes r(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.end());
    pos_ = b_.size();
    return r;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw Error(ErrorCode::Protocol, "truncated mqtt packet");
  }
  const Bytes& b_;
  std::size_t pos_ = 0;
};

bool known_type(std::uint8_t t) {
  switch (static_cast<PacketType>(t)) {
    case PacketType::Connect: case PacketType::Connack: case PacketType::Publish:
    case PacketType::Puback: case PacketType::Subscribe: case PacketType::Suback:
    case PacketType::Pingreq: case PacketType::Pingresp: case PacketType::Disconnect:
      return true;
  }
  return false;
}

}  // namespace

void Decoder::feed(std::span<const std::uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Packet> Decoder::next() {
  if (buf_.size() < 2) return std::nullopt;
  std::size_t len = 0, mult = 1, pos = 1;
  for (;;) {
    if (pos >= buf_.size()) return std::nullopt;
    if (pos > 4) throw Error(ErrorCode::Protocol, "mqtt remaining length exceeds 4 bytes");
    const std::uint8_t b = buf_[pos++];
    len += (b & 0x7fu) * mult;
    mult *= 128;
    if ((b & 0x80u) == 0) break;
  }
  if (buf_.size() < pos + len) return std::nullopt;
  const std::uint8_t type = buf_[0] >> 4;
  if (!known_type(type)) {
    throw Error(ErrorCode::Protocol, "unsupported mqtt packet type " + std::to_string(type));
  }
  Packet p;
  p.type = static_cast<PacketType>(type);
  p.flags = buf_[0] & 0x0f;
  p.body.assign(buf_.begin() + static_cast<std::ptrdiff_t>(pos),
                buf_.begin() + static_cast<std::ptrdiff_t>(pos + len));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos + len));
  return p;
}

Bytes encode(PacketType type, std::uint8_t flags, std::span<const std::uint8_t> body) {
  if (body.size() > 268435455) throw Error(ErrorCode::Protocol, "mqtt packet too large");
  Bytes out;
  out.push_back(static_cast<std::uint8_t>((static_cast<std::uint8_t>(type) << 4) | (flags & 0x0f)));
  std::size_t len = body.size();
  do {
    std::uint8_t b = len % 128;
    len /= 128;
    if (len > 0) b |= 0x80;
    out.push_back(b);
  } while (len > 0);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

Bytes encode_connect(const Connect& c) {
  Bytes body;
  put_str(body, "MQTT");
  body.push_back(4);  // protocol level 3.1.1
  body.push_back(c.clean_session ? 0x02 : 0x00);
  put_u16(body, c.keepalive_s);
  put_str(body, c.client_id);
  return encode(PacketType::Connect, 0, body);
}

Bytes encode_connack(std::uint8_t return_code) {
  const std::uint8_t body[] = {0, return_code};
  return encode(PacketType::Connack, 0, body);
}

Bytes encode_publish(const Publish& p) {
  if (p.qos > 1) throw Error(ErrorCode::Protocol, "QoS 2 is not supported");
  Bytes body;
  put_str(body, p.topic);
  if (p.qos > 0) put_u16(body, p.packet_id);
  body.insert(body.end(), p.payload.begin(), p.payload.end());
  const auto flags = static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | (p.qos << 1));
  return encode(PacketType::Publish, flags, body);
}

Bytes encode_puback(std::uint16_t packet_id) {
  Bytes body;
  put_u16(body, packet_id);
  return encode(PacketType::Puback, 0, body);
}

Bytes encode_subscribe(const Subscribe& s) {
  Bytes body;
  put_u16(body, s.packet_id);
  for (const auto& [topic, qos] : s.topics) {
    put_str(body, topic);
    body.push_back(qos);
  }
  return encode(PacketType::Subscribe, 0x02, body);
}

Bytes encode_suback(std::uint16_t packet_id, std::span<const std::uint8_t> codes) {
  Bytes body;
  put_u16(body, packet_id);
  body.insert(body.end(), codes.begin(), codes.end());
  return encode(PacketType::Suback, 0, body);
}

Bytes encode_simple(PacketType type) { return encode(type, 0, {}); }

Connect parse_connect(const Packet& p) {
  Cursor c(p.body);
  const auto name = c.str();
  const auto level = c.u8();
  if (name != "MQTT" || level != 4) throw Error(ErrorCode::Protocol, "unsupported mqtt protocol");
  Connect out;
  const auto flags = c.u8();
  out.clean_session = (flags & 0x02) != 0;
  out.keepalive_s = c.u16();
  out.client_id = c.str();
  return out;
}

Publish parse_publish(const Packet& p) {
  Cursor c(p.body);
  Publish out;
  out.qos = (p.flags >> 1) & 0x03;
  out.dup = (p.flags & 0x08) != 0;
  if (out.qos > 1) throw Error(ErrorCode::Protocol, "QoS 2 is not supported");
  out.topic = c.str();
  if (out.qos > 0) out.packet_id = c.u16();
  out.payload = c.rest();
  return out;
}

Subscribe parse_subscribe(const Packet& p) {
  Cursor c(p.body);
  Subscribe out;
  out.packet_id = c.u16();
  while (!c.done()) {
    auto topic = c.str();
    out.topics.emplace_back(std::move(topic), c.u8());
  }
  if (out.topics.empty()) throw Error(ErrorCode::Protocol, "subscribe without topics");
  return out;
}

std::uint16_t parse_packet_id(const Packet& p) {
  Cursor c(p.body);
  return c.u16();
}

net::Endpoint parse_url(const std::string& url) {
  std::string rest = url;
  for (const std::string scheme : {"mqtt://", "tcp://"}) {
    if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  }
  if (rest.find(':') == std::string::npos) rest += ":1883";
  return net::parse_endpoint(rest);
}

Client Client::connect(const net::Endpoint& broker, Connect options, int timeout_ms) {
  Client c;
  try {
    c.stream_ = net::TcpStream::connect(broker, timeout_ms);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NetworkUnreachable) throw;
    throw Error(ErrorCode::ConnectionRefused, std::string("mqtt broker ") + broker.str() + ": " + e.what());
  }
  c.keepalive_s_ = options.keepalive_s;
  c.send(encode_connect(options));
  const auto reply = c.read_packet(timeout_ms);
  if (!reply || reply->type != PacketType::Connack || reply->body.size() != 2) {
    throw Error(ErrorCode::ConnectionRefused, "mqtt broker " + broker.str() + " sent no CONNACK");
  }
  if (reply->body[1] != 0) {
    throw Error(ErrorCode::ConnectionRefused, "mqtt broker " + broker.str() +
                                                  " refused connection, code " +
                                                  std::to_string(reply->body[1]));
  }
  return c;
}

void Client::send(const Bytes& bytes) {
  stream_.write_all(bytes);
  last_send_ = std::chrono::steady_clock::now();
}

std::optional<Packet> Client::read_packet(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    if (auto p = decoder_.next()) return p;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() < 0) return std::nullopt;
    decoder_.feed(stream_.read_some(4096, static_cast<int>(left.count())));
  }
}

void Client::subscribe(const std::string& topic, std::uint8_t qos, int timeout_ms) {
  const std::uint16_t id = next_id_++;
  send(encode_subscribe({id, {{topic, qos}}}));
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    auto p = read_packet(50);
    if (!p) continue;
    if (p->type == PacketType::Puback && unacked_ > 0) --unacked_;
    if (p->type != PacketType::Suback || parse_packet_id(*p) != id) continue;
    if (p->body.size() < 3 || p->body[2] == kSubackFailure) {
      throw Error(ErrorCode::SubscriptionDenied, "broker denied subscription to " + topic);
    }
    return;
  }
  throw Error(ErrorCode::Protocol, "no SUBACK for " + topic);
}

void Client::publish(const std::string& topic, std::span<const std::uint8_t> payload, std::uint8_t qos) {
  Publish p;
  p.topic = topic;
  p.payload.assign(payload.begin(), payload.end());
  p.qos = qos;
  if (qos > 0) {
    p.packet_id = next_id_++;
    if (next_id_ == 0) next_id_ = 1;
    ++unacked_;
  }
  send(encode_publish(p));
}

std::optional<Publish> Client::poll(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    auto p = read_packet(static_cast<int>(std::max<long>(0, left.count())));
    if (!p) return std::nullopt;
    switch (p->type) {
      case PacketType::Publish: {
        auto pub = parse_publish(*p);
        if (pub.qos == 1) send(encode_puback(pub.packet_id));
        return pub;
      }
      case PacketType::Puback:
        if (unacked_ > 0) --unacked_;
        break;
      case PacketType::Pingresp:
        break;
      default:
        throw Error(ErrorCode::Protocol, "unexpected mqtt packet from broker");
    }
  }
}

void Client::keep_alive() {
  if (keepalive_s_ == 0) return;
  if (std::chrono::steady_clock::now() - last_send_ > std::chrono::seconds(keepalive_s_) / 2) {
    send(encode_simple(PacketType::Pingreq));
  }
}

bool Client::flush(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (unacked_ > 0 && std::chrono::steady_clock::now() < deadline) {
    if (poll(20)) throw Error(ErrorCode::Protocol, "publisher received a publish");
  }
  return unacked_ == 0;
}

void Client::disconnect() {
  if (!stream_.valid()) return;
  try {
    send(encode_simple(PacketType::Disconnect));
  } catch (const Error&) {
  }
  stream_.close();
}

Subscriber::Subscriber(net::Endpoint broker, std::string client_id, std::vector<std::string> topics,
                       SubscriberCallbacks callbacks)
    : broker_(std::move(broker)),
      client_id_(std::move(client_id)),
      topics_(std::move(topics)),
      cb_(std::move(callbacks)) {}

Subscriber::~Subscriber() { stop(); }

Client Subscriber::open() {
  auto c = Client::connect(broker_, {client_id_, 10, true});
  for (const auto& t : topics_) c.subscribe(t, 1);
  if (cb_.on_connected) cb_.on_connected();
  return c;
}

void Subscriber::start() {
  auto first = open();
  running_ = true;
  thread_ = std::thread([this, c = std::move(first)]() mutable { run(std::move(c)); });
}

void Subscriber::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

void Subscriber::run(Client client) {
  std::optional<Client> c(std::move(client));
  auto backoff = std::chrono::milliseconds(100);
  while (running_) {
    if (!c) {
      try {
        c = open();
        backoff = std::chrono::milliseconds(100);
        ++reconnects_;
      } catch (const Error& e) {
        if (cb_.on_error) cb_.on_error(e.what());
        const auto until = std::chrono::steady_clock::now() + backoff;
        while (running_ && std::chrono::steady_clock::now() < until) {
          std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        backoff = std::min(backoff * 2, std::chrono::milliseconds(2000));
        continue;
      }
    }
    try {
      if (auto pub = c->poll(50)) {
        if (cb_.on_message) cb_.on_message(*pub);
      }
      c->keep_alive();
    } catch (const Error& e) {
      c.reset();
      if (cb_.on_gap) cb_.on_gap(e.what());
    }
  }
  if (c) c->disconnect();
}

}  // namespace geeg::mqtt
