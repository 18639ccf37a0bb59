#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "geeg/net.hpp"

// Just enough MQTT 3.1.1 for QoS 0/1 telemetry: connect, subscribe,
// publish, acknowledge, keep-alive.
namespace geeg::mqtt {

using Bytes = std::vector<std::uint8_t>;

enum class PacketType : std::uint8_t {
  Connect = 1, Connack = 2, Publish = 3, Puback = 4, Subscribe = 8, Suback = 9,
  Pingreq = 12, Pingresp = 13, Disconnect = 14,
};

struct Packet {
  PacketType type{};
  std::uint8_t flags = 0;  // low nibble of the fixed header
  Bytes body;
};

// Accumulates stream bytes and yields whole packets. Throws Protocol on a
// malformed fixed header or an unsupported packet type.
class Decoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Packet> next();

 private:
  Bytes buf_;
};

Bytes encode(PacketType type, std::uint8_t flags, std::span<const std::uint8_t> body);

struct Connect {
  std::string client_id;
  std::uint16_t keepalive_s = 30;
  bool clean_session = true;
};
struct Publish {
  std::string topic;
  Bytes payload;
  std::uint8_t qos = 0;
  std::uint16_t packet_id = 0;
  bool dup = false;
};
struct Subscribe {
  std::uint16_t packet_id = 0;
  std::vector<std::pair<std::string, std::uint8_t>> topics;
};

Bytes encode_connect(const Connect& c);
Bytes encode_connack(std::uint8_t return_code);
Bytes encode_publish(const Publish& p);
Bytes encode_puback(std::uint16_t packet_id);
Bytes encode_subscribe(const Subscribe& s);
Bytes encode_suback(std::uint16_t packet_id, std::span<const std::uint8_t> codes);
Bytes encode_simple(PacketType type);  // PINGREQ, PINGRESP, DISCONNECT

Connect parse_connect(const Packet& p);
Publish parse_publish(const Packet& p);
Subscribe parse_subscribe(const Packet& p);
std::uint16_t parse_packet_id(const Packet& p);  // PUBACK, SUBACK

inline constexpr std::uint8_t kSubackFailure = 0x80;

// "mqtt://host:port", "tcp://host:port" or "host:port"; default port 1883.
net::Endpoint parse_url(const std::string& url);

// Synchronous client. All calls are from one thread.
class Client {
 public:
  // Throws ConnectionRefused (socket refused or CONNACK code != 0) or
  // NetworkUnreachable.
  static Client connect(const net::Endpoint& broker, Connect options, int timeout_ms = 2000);

  // Throws SubscriptionDenied when the broker answers 0x80.
  void subscribe(const std::string& topic, std::uint8_t qos = 1, int timeout_ms = 2000);
  void publish(const std::string& topic, std::span<const std::uint8_t> payload, std::uint8_t qos = 1);
  // Incoming publish (QoS 1 is acknowledged before returning), or nullopt
  // on timeout. Also consumes PUBACK and PINGRESP. Throws Io on disconnect.
  std::optional<Publish> poll(int timeout_ms);
  // Sends PINGREQ when the keep-alive interval is half spent.
  void keep_alive();
  // Waits until every QoS 1 publish has been acknowledged.
  bool flush(int timeout_ms);
  void disconnect();

  std::size_t unacked() const { return unacked_; }

 private:
  std::optional<Packet> read_packet(int timeout_ms);
  void send(const Bytes& bytes);

  net::TcpStream stream_;
  Decoder decoder_;
  std::uint16_t keepalive_s_ = 30;
  std::uint16_t next_id_ = 1;
  std::size_t unacked_ = 0;
  std::chrono::steady_clock::time_point last_send_{};
};

struct SubscriberCallbacks {
  std::function<void(const Publish&)> on_message;
  std::function<void(const std::string& reason)> on_gap;        // connection lost
  std::function<void(const std::string& reason)> on_error;      // reconnect attempt failed
  std::function<void()> on_connected;                           // also after each reconnect
};

// Background subscription that survives broker restarts. The first
// connection is made synchronously so configuration errors surface at
// start(); later drops reconnect with backoff from 100 ms doubling to 2 s.
class Subscriber {
 public:
  Subscriber(net::Endpoint broker, std::string client_id, std::vector<std::string> topics,
             SubscriberCallbacks callbacks);
  ~Subscriber();
  Subscriber(const Subscriber&) = delete;
  Subscriber& operator=(const Subscriber&) = delete;

  void start();
  void stop();
  std::size_t reconnects() const { return reconnects_.load(); }

 private:
  Client open();
  void run(Client client);

  net::Endpoint broker_;
  std::string client_id_;
  std::vector<std::string> topics_;
  SubscriberCallbacks cb_;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> reconnects_{0};
  std::thread thread_;
};

}  // namespace geeg::mqtt
