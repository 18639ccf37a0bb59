#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "geeg/broker.hpp"
#include "geeg/error.hpp"
#include "geeg/mqtt.hpp"
#include "support/expect.hpp"

using namespace geeg;
using namespace geeg::mqtt;
using namespace std::chrono_literals;

namespace {

Bytes text(std::string_view s) { return Bytes(s.begin(), s.end()); }

net::Endpoint local(std::uint16_t port) { return {"127.0.0.1", port}; }

template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = 3000ms) {
  const auto until = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < until) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

}  // namespace

TEST_CASE("fixed header remaining length uses 7-bit groups", "[mqtt]") {
  for (std::size_t n : {0u, 127u, 128u, 16383u, 16384u, 300000u}) {
    const Bytes body(n, 0xab);
    const auto wire = encode(PacketType::Publish, 0, body);
    const std::size_t header = n < 128 ? 2 : n < 16384 ? 3 : 4;
    REQUIRE(wire.size() == n + header);
    Decoder d;
    // Byte-at-a-time delivery must still produce exactly one packet.
    for (std::size_t i = 0; i + 1 < wire.size(); ++i) {
      d.feed(std::span(wire).subspan(i, 1));
      REQUIRE_FALSE(d.next());
    }
    d.feed(std::span(wire).last(1));
    const auto p = d.next();
    REQUIRE(p);
    CHECK(p->body == body);
  }
  CHECK(encode_simple(PacketType::Pingreq) == Bytes{0xc0, 0x00});
}

TEST_CASE("packet codecs round-trip", "[mqtt]") {
  Decoder d;
  const Publish pub{"gaze/p01", text("{\"x\":1}"), 1, 77, false};
  d.feed(encode_publish(pub));
  const auto p = parse_publish(*d.next());
  CHECK(p.topic == pub.topic);
  CHECK(p.payload == pub.payload);
  CHECK(p.qos == 1);
  CHECK(p.packet_id == 77);

  d.feed(encode_connect({"rec", 15, true}));
  const auto c = parse_connect(*d.next());
  CHECK(c.client_id == "rec");
  CHECK(c.keepalive_s == 15);

  d.feed(encode_subscribe({9, {{"gaze/+", 1}}}));
  const auto s = parse_subscribe(*d.next());
  CHECK(s.packet_id == 9);
  CHECK(s.topics.at(0).first == "gaze/+");

  d.feed(Bytes{0x70, 0x00});  // PUBREC: outside the supported subset
  CHECK_THROWS_CODE(d.next(), ErrorCode::Protocol);
}

TEST_CASE("topic filters", "[mqtt]") {
  CHECK(topic_matches("gaze/p01", "gaze/p01"));
  CHECK(topic_matches("gaze/+", "gaze/p01"));
  CHECK(topic_matches("#", "gaze/p01"));
  CHECK(topic_matches("gaze/#", "gaze/p01/x"));
  CHECK_FALSE(topic_matches("gaze/+", "gaze/p01/x"));
  CHECK_FALSE(topic_matches("gaze/p02", "gaze/p01"));
}

TEST_CASE("url parsing", "[mqtt]") {
  CHECK(parse_url("mqtt://localhost:1999").port == 1999);
  CHECK(parse_url("10.0.0.2").port == 1883);
  CHECK(parse_url("tcp://h:2").host == "h");
}

TEST_CASE("QoS 1 publish reaches a subscriber through the broker", "[mqtt][net]") {
  Broker broker;
  broker.start();
  auto sub = Client::connect(local(broker.port()), {"sub"});
  sub.subscribe("gaze/p01", 1);
  auto pub = Client::connect(local(broker.port()), {"pub"});
  for (int i = 0; i < 20; ++i) pub.publish("gaze/p01", text(std::to_string(i)), 1);
  pub.publish("gaze/other", text("x"), 1);
  CHECK(pub.flush(2000));

  std::vector<std::string> got;
  while (got.size() < 20) {
    auto m = sub.poll(2000);
    REQUIRE(m);
    CHECK(m->qos == 1);
    got.emplace_back(m->payload.begin(), m->payload.end());
  }
  CHECK(got.front() == "0");
  CHECK(got.back() == "19");
  CHECK_FALSE(sub.poll(100));
}

TEST_CASE("refused connections and denied subscriptions", "[mqtt][net]") {
  Broker refusing({.connack_code = 5});
  refusing.start();
  CHECK_THROWS_CODE(Client::connect(local(refusing.port()), {"c"}), ErrorCode::ConnectionRefused);

  Broker denying({.denied_topics = {"gaze/secret"}});
  denying.start();
  auto c = Client::connect(local(denying.port()), {"c"});
  CHECK_THROWS_CODE(c.subscribe("gaze/secret"), ErrorCode::SubscriptionDenied);

  // Nothing listening on this port once the broker is gone.
  Broker gone;
  gone.start();
  const auto port = gone.port();
  gone.stop();
  CHECK_THROWS_CODE(Client::connect(local(port), {"c"}), ErrorCode::ConnectionRefused);
}

TEST_CASE("subscriber survives a broker restart", "[mqtt][net]") {
  Broker broker;
  broker.start();
  const auto ep = local(broker.port());

  std::mutex m;
  std::vector<std::string> got;
  std::atomic<int> gaps{0}, connects{0};
  Subscriber sub(ep, "rec", {"gaze/p01"},
                 {.on_message = [&](const Publish& p) {
                    std::lock_guard lock(m);
                    got.emplace_back(p.payload.begin(), p.payload.end());
                  },
                  .on_gap = [&](const std::string&) { ++gaps; },
                  .on_error = nullptr,
                  .on_connected = [&] { ++connects; }});
  sub.start();

  auto publish = [&](const std::string& payload) {
    auto pub = Client::connect(ep, {"pub"});
    pub.publish("gaze/p01", text(payload), 1);
    REQUIRE(pub.flush(2000));
    pub.disconnect();
  };
  publish("before");
  REQUIRE(eventually([&] { std::lock_guard lock(m); return got.size() == 1; }));

  broker.stop();
  REQUIRE(eventually([&] { return gaps.load() == 1; }));
  std::this_thread::sleep_for(300ms);
  broker.start();
  REQUIRE(eventually([&] { return connects.load() == 2; }, 5000ms));
  publish("after");
  REQUIRE(eventually([&] { std::lock_guard lock(m); return got.size() == 2; }));
  sub.stop();
  CHECK(got.back() == "after");
  CHECK(sub.reconnects() == 1);
}
