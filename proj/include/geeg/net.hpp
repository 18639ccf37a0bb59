#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace geeg::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port"; throws InvalidConfig.
Endpoint parse_endpoint(const std::string& text);

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept;
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void reset() noexcept;

 private:
  int fd_ = -1;
};

struct Datagram {
  std::vector<std::uint8_t> bytes;
  std::string source;  // host:port
};

class UdpSocket {
 public:
  // Listening socket on 0.0.0.0:port (0 picks a free port). Throws Io.
  static UdpSocket bind(std::uint16_t port, const std::string& host = "0.0.0.0");
  // Sending socket connected to target. Throws NetworkUnreachable when the
  // host does not resolve or no route exists; nothing is sent.
  static UdpSocket connect(const Endpoint& target);

  std::uint16_t local_port() const;
  void send(std::span<const std::uint8_t> bytes);
  // Waits up to timeout_ms; nullopt on timeout.
  std::optional<Datagram> receive(int timeout_ms);
  int fd() const { return fd_.get(); }

 private:
  Fd fd_;
};

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(Fd fd) : fd_(std::move(fd)) {}

  // Throws ConnectionRefused or NetworkUnreachable.
  static TcpStream connect(const Endpoint& target, int timeout_ms = 2000);

  bool valid() const { return fd_.valid(); }
  int fd() const { return fd_.get(); }
  void close() { fd_.reset(); }

  // Writes everything or throws Io (peer gone, or timeout).
  void write_all(std::span<const std::uint8_t> bytes, int timeout_ms = 2000);
  // Reads up to max bytes; empty on timeout; throws Io on EOF or error.
  std::vector<std::uint8_t> read_some(std::size_t max, int timeout_ms);
  // Non-blocking variants for poll loops: -1 means would block.
  long try_write(std::span<const std::uint8_t> bytes);

 private:
  Fd fd_;
};

class TcpListener {
 public:
  static TcpListener bind(std::uint16_t port, const std::string& host = "0.0.0.0");
  std::uint16_t local_port() const;
  // nullopt on timeout.
  std::optional<TcpStream> accept(int timeout_ms);
  int fd() const { return fd_.get(); }

 private:
  Fd fd_;
};

void set_nonblocking(int fd);

}  // namespace geeg::net
