#include "geeg/broker.hpp"

#include <poll.h>

#include <algorithm>
#include <list>

#include "geeg/error.hpp"
#include "geeg/mqtt.hpp"
#include "geeg/net.hpp"

namespace geeg::mqtt {
namespace {

struct Session {
  net::TcpStream stream;
  Decoder decoder;
  bool connected = false;
  std::vector<std::pair<std::string, std::uint8_t>> subscriptions;
  std::uint16_t next_id = 1;
  bool dead = false;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto slash = s.find('/', start);
    out.push_back(s.substr(start, slash - start));
    if (slash == std::string::npos) return out;
    start = slash + 1;
  }
}

void send(Session& s, const Bytes& bytes) {
  try {
    s.stream.write_all(bytes, 1000);
  } catch (const Error&) {
    s.dead = true;
  }
}

}  // namespace

bool topic_matches(const std::string& filter, const std::string& topic) {
  const auto f = split(filter), t = split(topic);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == "#") return true;
    if (i >= t.size()) return false;
    if (f[i] != "+" && f[i] != t[i]) return false;
  }
  return f.size() == t.size();
}

Broker::Broker(BrokerOptions options) : opt_(std::move(options)), port_(opt_.port) {}

Broker::~Broker() { stop(); }

void Broker::start() {
  if (running_) return;
  auto listener = net::TcpListener::bind(port_, opt_.host);
  port_ = listener.local_port();
  running_ = true;
  thread_ = std::thread([this, l = std::move(listener)]() mutable { run(std::move(l)); });
}

void Broker::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

void Broker::run(net::TcpListener listener) {
  std::list<Session> sessions;

  while (running_) {
    std::vector<pollfd> fds;
    fds.push_back({listener.fd(), POLLIN, 0});
    for (auto& s : sessions) fds.push_back({s.stream.fd(), POLLIN, 0});
    if (::poll(fds.data(), fds.size(), 20) <= 0) continue;

    if (fds[0].revents & POLLIN) {
      if (auto accepted = listener.accept(0)) {
        sessions.emplace_back();
        sessions.back().stream = std::move(*accepted);
      }
    }

    std::size_t k = 1;
    for (auto& s : sessions) {
      const auto revents = k < fds.size() ? fds[k].revents : 0;
      ++k;
      if (s.dead || (revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      try {
        auto bytes = s.stream.read_some(65536, 0);
        s.decoder.feed(bytes);
        while (auto p = s.decoder.next()) {
          if (!s.connected && p->type != PacketType::Connect) throw Error(ErrorCode::Protocol, "expected CONNECT");
          switch (p->type) {
            case PacketType::Connect:
              parse_connect(*p);
              send(s, encode_connack(opt_.connack_code));
              if (opt_.connack_code != 0) s.dead = true;
              s.connected = true;
              break;
            case PacketType::Subscribe: {
              const auto sub = parse_subscribe(*p);
              std::vector<std::uint8_t> codes;
              for (const auto& [topic, qos] : sub.topics) {
                const bool denied = std::any_of(opt_.denied_topics.begin(), opt_.denied_topics.end(),
                                                [&](const std::string& d) { return topic_matches(d, topic); });
                if (denied) {
                  codes.push_back(kSubackFailure);
                } else {
                  const auto granted = std::min<std::uint8_t>(qos, 1);
                  s.subscriptions.emplace_back(topic, granted);
                  codes.push_back(granted);
                }
              }
              send(s, encode_suback(sub.packet_id, codes));
              break;
            }
            case PacketType::Publish: {
              const auto pub = parse_publish(*p);
              if (pub.qos == 1) send(s, encode_puback(pub.packet_id));
              ++published_;
              for (auto& other : sessions) {
                for (const auto& [filter, qos] : other.subscriptions) {
                  if (!topic_matches(filter, pub.topic)) continue;
                  Publish out{pub.topic, pub.payload, std::min(qos, pub.qos), 0, false};
                  if (out.qos > 0) {
                    out.packet_id = other.next_id++;
                    if (other.next_id == 0) other.next_id = 1;
                  }
                  send(other, encode_publish(out));
                  ++delivered_;
                  break;
                }
              }
              break;
            }
            case PacketType::Puback:
              break;
            case PacketType::Pingreq:
              send(s, encode_simple(PacketType::Pingresp));
              break;
            case PacketType::Disconnect:
              s.dead = true;
              break;
            default:
              throw Error(ErrorCode::Protocol, "unexpected packet");
          }
        }
      } catch (const Error&) {
        s.dead = true;
      }
    }
    sessions.remove_if([](const Session& s) { return s.dead; });
  }
}

}  // namespace geeg::mqtt
