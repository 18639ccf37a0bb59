#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "geeg/net.hpp"

// Small in-process MQTT broker so simulations and tests need no external
// server. QoS 0/1, clean sessions, '+' and '#' wildcards, no retained
// messages.
namespace geeg::mqtt {

struct BrokerOptions {
  std::uint16_t port = 0;             // 0 picks a free port on first start
  std::string host = "127.0.0.1";
  std::uint8_t connack_code = 0;      // nonzero refuses every CONNECT
  std::vector<std::string> denied_topics;
};

bool topic_matches(const std::string& filter, const std::string& topic);

class Broker {
 public:
  explicit Broker(BrokerOptions options = {});
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  // Binds (again, after stop) and serves on a background thread.
  void start();
  // Drops every client connection and stops listening.
  void stop();

  std::uint16_t port() const { return port_; }
  std::size_t published() const { return published_.load(); }
  std::size_t delivered() const { return delivered_.load(); }

 private:
  void run(net::TcpListener listener);

  BrokerOptions opt_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> published_{0};
  std::atomic<std::size_t> delivered_{0};
  std::thread thread_;
};

}  // namespace geeg::mqtt
