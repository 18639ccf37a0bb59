#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "geeg/net.hpp"

// Minimal RFC 6455 text-frame WebSocket: a poll-driven server for the live
// endpoint and a blocking client for operator tools and tests.
namespace geeg::ws {

using Bytes = std::vector<std::uint8_t>;

enum class Opcode : std::uint8_t { Continuation = 0, Text = 1, Binary = 2, Close = 8, Ping = 9, Pong = 10 };

struct Frame {
  bool fin = true;
  Opcode opcode = Opcode::Text;
  Bytes payload;  // unmasked
};

// Sec-WebSocket-Accept for a client key.
std::string accept_key(const std::string& client_key);

Bytes encode_frame(Opcode op, std::span<const std::uint8_t> payload,
                   std::optional<std::uint32_t> mask = std::nullopt);

// Throws Protocol on reserved bits, oversized frames or bad opcodes.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_payload = 1 << 20) : max_(max_payload) {}
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Frame> next();

 private:
  Bytes buf_;
  std::size_t max_;
};

struct ServerOptions {
  std::uint16_t port = 0;
  std::string host = "0.0.0.0";
  std::string path = "/live";  // "?frames=off" opts a client out of broadcasts
  std::size_t max_queued_frames = 64;  // per client; overflow disconnects it
};

// Reply text for an inbound text message, or nullopt for no reply.
using MessageHandler = std::function<std::optional<std::string>(const std::string&)>;

class Server {
 public:
  Server(ServerOptions options, MessageHandler handler);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

  std::size_t client_count() const { return clients_.load(); }
  std::size_t subscriber_count() const { return subscribers_.load(); }  // clients taking broadcasts
  std::size_t dropped_clients() const { return dropped_.load(); }
  // Queues a text frame to every subscribed client. No-op without any.
  void broadcast(const std::string& text);

 private:
  struct Client;
  void run(net::TcpListener listener);
  void wake();

  ServerOptions opt_;
  MessageHandler handler_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::size_t> clients_{0};
  std::atomic<std::size_t> subscribers_{0};
  std::atomic<std::size_t> dropped_{0};
  std::mutex mu_;
  std::vector<std::string> pending_;  // broadcast frames not yet handed to clients
  int wake_fd_ = -1;
  std::thread thread_;
};

class Client {
 public:
  // Throws ConnectionRefused / NetworkUnreachable, or Protocol when the
  // upgrade is rejected.
  static Client connect(const net::Endpoint& server, const std::string& path = "/live",
                        int timeout_ms = 2000);

  void send_text(const std::string& text);
  // Next text message; answers pings; nullopt on timeout. Throws Io when
  // the server closes.
  std::optional<std::string> receive(int timeout_ms);
  void close();

 private:
  net::TcpStream stream_;
  FrameDecoder decoder_;
  std::uint32_t mask_seed_ = 0x9e3779b9u;
};

}  // namespace geeg::ws
