#include "geeg/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "geeg/error.hpp"

namespace geeg::net {
namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw Error(ErrorCode::NetworkUnreachable,
                "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

sockaddr_in any_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::InvalidConfig, "bad bind address " + host);
  }
  return addr;
}

std::uint16_t port_of(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw Error(ErrorCode::Io, sys_error("getsockname"));
  }
  return ntohs(addr.sin_port);
}

bool wait_for(int fd, short events, int timeout_ms) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, timeout_ms);
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw Error(ErrorCode::Io, sys_error("poll"));
  }
}

bool unreachable_errno(int e) {
  return e == ENETUNREACH || e == EHOSTUNREACH || e == EADDRNOTAVAIL || e == ENETDOWN;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw Error(ErrorCode::InvalidConfig, "expected host:port, got '" + text + "'");
  }
  Endpoint ep;
  ep.host = text.substr(0, colon);
  try {
    const int port = std::stoi(text.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad port in '" + text + "'");
  }
  return ep;
}

Fd& Fd::operator=(Fd&& o) noexcept {
  if (this != &o) {
    reset();
    fd_ = o.release();
  }
  return *this;
}

int Fd::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Fd::reset() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) {
    throw Error(ErrorCode::Io, sys_error("fcntl"));
  }
}

UdpSocket UdpSocket::bind(std::uint16_t port, const std::string& host) {
  UdpSocket s;
  s.fd_ = Fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
  if (!s.fd_.valid()) throw Error(ErrorCode::Io, sys_error("socket"));
  int rcvbuf = 4 << 20;
  ::setsockopt(s.fd_.get(), SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof(rcvbuf));
  const auto addr = any_address(host, port);
  if (::bind(s.fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(ErrorCode::Io, sys_error("bind udp " + host + ":" + std::to_string(port)));
  }
  return s;
}

UdpSocket UdpSocket::connect(const Endpoint& target) {
  const auto addr = resolve(target);
  UdpSocket s;
  s.fd_ = Fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
  if (!s.fd_.valid()) throw Error(ErrorCode::Io, sys_error("socket"));
  if (::connect(s.fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int e = errno;
    throw Error(unreachable_errno(e) ? ErrorCode::NetworkUnreachable : ErrorCode::Io,
                "udp connect " + target.str() + ": " + std::strerror(e));
  }
  return s;
}

std::uint16_t UdpSocket::local_port() const { return port_of(fd_.get()); }

void UdpSocket::send(std::span<const std::uint8_t> bytes) {
  for (;;) {
    if (::send(fd_.get(), bytes.data(), bytes.size(), 0) >= 0) return;
    // A previous datagram bounced off a closed port; keep going.
    if (errno == ECONNREFUSED || errno == EINTR) continue;
    if (unreachable_errno(errno)) throw Error(ErrorCode::NetworkUnreachable, sys_error("udp send"));
    throw Error(ErrorCode::Io, sys_error("udp send"));
  }
}

std::optional<Datagram> UdpSocket::receive(int timeout_ms) {
  if (!wait_for(fd_.get(), POLLIN, timeout_ms)) return std::nullopt;
  Datagram d;
  d.bytes.resize(65536);
  sockaddr_in from{};
  socklen_t len = sizeof(from);
  const auto n = ::recvfrom(fd_.get(), d.bytes.data(), d.bytes.size(), 0,
                            reinterpret_cast<sockaddr*>(&from), &len);
  if (n < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNREFUSED) return std::nullopt;
    throw Error(ErrorCode::Io, sys_error("recvfrom"));
  }
  d.bytes.resize(static_cast<std::size_t>(n));
  char host[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &from.sin_addr, host, sizeof(host));
  d.source = std::string(host) + ":" + std::to_string(ntohs(from.sin_port));
  return d;
}

TcpStream TcpStream::connect(const Endpoint& target, int timeout_ms) {
  const auto addr = resolve(target);
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw Error(ErrorCode::Io, sys_error("socket"));
  set_nonblocking(fd.get());
  if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    if (errno != EINPROGRESS) {
      const int e = errno;
      throw Error(unreachable_errno(e) ? ErrorCode::NetworkUnreachable : ErrorCode::ConnectionRefused,
                  "connect " + target.str() + ": " + std::strerror(e));
    }
    if (!wait_for(fd.get(), POLLOUT, timeout_ms)) {
      throw Error(ErrorCode::NetworkUnreachable, "connect " + target.str() + ": timed out");
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      throw Error(unreachable_errno(err) ? ErrorCode::NetworkUnreachable : ErrorCode::ConnectionRefused,
                  "connect " + target.str() + ": " + std::strerror(err));
    }
  }
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(std::move(fd));
}

void TcpStream::write_all(std::span<const std::uint8_t> bytes, int timeout_ms) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::send(fd_.get(), bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n > 0) {
      done += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      if (!wait_for(fd_.get(), POLLOUT, timeout_ms)) throw Error(ErrorCode::Io, "tcp write timed out");
      continue;
    }
    throw Error(ErrorCode::Io, sys_error("tcp write"));
  }
}

long TcpStream::try_write(std::span<const std::uint8_t> bytes) {
  const auto n = ::send(fd_.get(), bytes.data(), bytes.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
  if (n >= 0) return static_cast<long>(n);
  if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return -1;
  throw Error(ErrorCode::Io, sys_error("tcp write"));
}

std::vector<std::uint8_t> TcpStream::read_some(std::size_t max, int timeout_ms) {
  if (!wait_for(fd_.get(), POLLIN, timeout_ms)) return {};
  std::vector<std::uint8_t> buf(max);
  for (;;) {
    const auto n = ::recv(fd_.get(), buf.data(), buf.size(), MSG_DONTWAIT);
    if (n > 0) {
      buf.resize(static_cast<std::size_t>(n));
      return buf;
    }
    if (n == 0) throw Error(ErrorCode::Io, "connection closed by peer");
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) return {};
    throw Error(ErrorCode::Io, sys_error("tcp read"));
  }
}

TcpListener TcpListener::bind(std::uint16_t port, const std::string& host) {
  TcpListener l;
  l.fd_ = Fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!l.fd_.valid()) throw Error(ErrorCode::Io, sys_error("socket"));
  int one = 1;
  ::setsockopt(l.fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  const auto addr = any_address(host, port);
  if (::bind(l.fd_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(l.fd_.get(), 16) != 0) {
    throw Error(ErrorCode::Io, sys_error("listen tcp " + host + ":" + std::to_string(port)));
  }
  return l;
}

std::uint16_t TcpListener::local_port() const { return port_of(fd_.get()); }

std::optional<TcpStream> TcpListener::accept(int timeout_ms) {
  if (!wait_for(fd_.get(), POLLIN, timeout_ms)) return std::nullopt;
  Fd fd(::accept4(fd_.get(), nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK));
  if (!fd.valid()) {
    if (errno == EAGAIN || errno == EINTR || errno == ECONNABORTED) return std::nullopt;
    throw Error(ErrorCode::Io, sys_error("accept"));
  }
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(std::move(fd));
}

}  // namespace geeg::net
