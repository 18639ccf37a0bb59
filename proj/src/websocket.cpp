#include "geeg/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/eventfd.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <deque>
#include <list>

#include "geeg/error.hpp"

namespace geeg::ws {
namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

struct Request {
  std::string method, target;
  std::vector<std::pair<std::string, std::string>> headers;  // lower-cased names

  std::string header(const std::string& name) const {
    for (const auto& [k, v] : headers) {
      if (k == name) return v;
    }
    return {};
  }
};

// Parses the request head; nullopt while incomplete.
std::optional<Request> parse_request(const std::string& head) {
  const auto end = head.find("\r\n\r\n");
  if (end == std::string::npos) return std::nullopt;
  Request r;
  std::size_t pos = head.find("\r\n");
  const std::string first = head.substr(0, pos);
  const auto sp1 = first.find(' '), sp2 = first.rfind(' ');
  if (sp1 == std::string::npos || sp2 == sp1) throw Error(ErrorCode::Protocol, "bad request line");
  r.method = first.substr(0, sp1);
  r.target = first.substr(sp1 + 1, sp2 - sp1 - 1);
  while (pos < end) {
    const auto next = head.find("\r\n", pos + 2);
    const std::string line = head.substr(pos + 2, next - pos - 2);
    const auto colon = line.find(':');
    if (colon != std::string::npos) r.headers.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
    pos = next;
  }
  return r;
}

Bytes as_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string joined = client_key + std::string(kGuid);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  unsigned char out[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(out, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(out), static_cast<std::size_t>(n));
}

Bytes encode_frame(Opcode op, std::span<const std::uint8_t> payload, std::optional<std::uint32_t> mask) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(op)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | n));
  } else if (n <= 0xffff) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mask_bit | 127);
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(std::uint64_t{n} >> shift));
  }
  std::uint8_t key[4] = {};
  if (mask) {
    for (int i = 0; i < 4; ++i) key[i] = static_cast<std::uint8_t>(*mask >> (24 - 8 * i));
    out.insert(out.end(), key, key + 4);
  }
  const std::size_t start = out.size();
  out.insert(out.end(), payload.begin(), payload.end());
  if (mask) {
    for (std::size_t i = 0; i < n; ++i) out[start + i] ^= key[i % 4];
  }
  return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<Frame> FrameDecoder::next() {
  if (buf_.size() < 2) return std::nullopt;
  if (buf_[0] & 0x70) throw Error(ErrorCode::Protocol, "websocket reserved bits set");
  Frame f;
  f.fin = (buf_[0] & 0x80) != 0;
  const std::uint8_t op = buf_[0] & 0x0f;
  if (op > 2 && (op < 8 || op > 10)) throw Error(ErrorCode::Protocol, "bad websocket opcode");
  f.opcode = static_cast<Opcode>(op);
  const bool masked = (buf_[1] & 0x80) != 0;
  std::uint64_t n = buf_[1] & 0x7f;
  std::size_t pos = 2;
  if (n >= 126) {
    const std::size_t ext = n == 126 ? 2 : 8;
    if (buf_.size() < pos + ext) return std::nullopt;
    n = 0;
    for (std::size_t i = 0; i < ext; ++i) n = (n << 8) | buf_[pos + i];
    pos += ext;
  }
  if (n > max_) throw Error(ErrorCode::Protocol, "websocket frame too large");
  std::uint8_t key[4] = {};
  if (masked) {
    if (buf_.size() < pos + 4) return std::nullopt;
    std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(pos), 4, key);
    pos += 4;
  }
  if (buf_.size() < pos + n) return std::nullopt;
  f.payload.assign(buf_.begin() + static_cast<std::ptrdiff_t>(pos),
                   buf_.begin() + static_cast<std::ptrdiff_t>(pos + n));
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) f.payload[i] ^= key[i % 4];
  }
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return f;
}

struct Server::Client {
  net::TcpStream stream;
  std::string head;  // request bytes until the upgrade completes
  bool open = false;
  bool closing = false;  // flush the queue, then drop
  bool subscribed = true;
  FrameDecoder decoder;
  Bytes message;  // fragmented text in progress
  std::deque<Bytes> queue;
  std::size_t sent_of_front = 0;
};

Server::Server(ServerOptions options, MessageHandler handler)
    : opt_(std::move(options)), handler_(std::move(handler)), port_(opt_.port) {}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  auto listener = net::TcpListener::bind(port_, opt_.host);
  port_ = listener.local_port();
  wake_fd_ = ::eventfd(0, EFD_NONBLOCK | EFD_CLOEXEC);
  if (wake_fd_ < 0) throw Error(ErrorCode::Io, "eventfd failed");
  running_ = true;
  thread_ = std::thread([this, l = std::move(listener)]() mutable { run(std::move(l)); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  wake();
  if (thread_.joinable()) thread_.join();
  ::close(wake_fd_);
  wake_fd_ = -1;
  clients_ = 0;
  subscribers_ = 0;
}

void Server::wake() {
  if (wake_fd_ < 0) return;
  const std::uint64_t one = 1;
  [[maybe_unused]] auto n = ::write(wake_fd_, &one, sizeof(one));
}

void Server::broadcast(const std::string& text) {
  if (subscribers_.load() == 0) return;
  {
    std::lock_guard lock(mu_);
    pending_.push_back(text);
  }
  wake();
}

void Server::run(net::TcpListener listener) {
  std::list<Client> clients;
  auto drop = [&](Client& c) {
    c.stream.close();
  };

  while (running_) {
    std::vector<pollfd> fds{{listener.fd(), POLLIN, 0}, {wake_fd_, POLLIN, 0}};
    for (auto& c : clients) {
      short ev = POLLIN;
      if (!c.queue.empty()) ev |= POLLOUT;
      fds.push_back({c.stream.fd(), ev, 0});
    }
    if (::poll(fds.data(), fds.size(), 100) < 0) continue;

    if (fds[1].revents & POLLIN) {
      std::uint64_t v;
      [[maybe_unused]] auto n = ::read(wake_fd_, &v, sizeof(v));
    }
    std::vector<std::string> outgoing;
    {
      std::lock_guard lock(mu_);
      outgoing.swap(pending_);
    }
    for (auto& c : clients) {
      if (!c.open || c.closing || !c.subscribed) continue;
      for (const auto& text : outgoing) {
        if (c.queue.size() >= opt_.max_queued_frames) {
          // Slow consumer: it loses the connection, the recording loses nothing.
          ++dropped_;
          drop(c);
          break;
        }
        c.queue.push_back(encode_frame(Opcode::Text, as_bytes(text)));
      }
    }

    if (fds[0].revents & POLLIN) {
      if (auto s = listener.accept(0)) {
        clients.emplace_back();
        clients.back().stream = std::move(*s);
      }
    }

    std::size_t k = 2;
    for (auto& c : clients) {
      const short revents = k < fds.size() ? fds[k].revents : 0;
      ++k;
      if (!c.stream.valid()) continue;
      try {
        if (revents & (POLLIN | POLLHUP | POLLERR)) {
          const auto bytes = c.stream.read_some(65536, 0);
          if (!c.open) {
            c.head.append(bytes.begin(), bytes.end());
            if (c.head.size() > 16384) throw Error(ErrorCode::Protocol, "request head too large");
            if (auto req = parse_request(c.head)) {
              const std::string key = req->header("sec-websocket-key");
              const auto q = req->target.find('?');
              const std::string path = req->target.substr(0, q);
              const std::string query = q == std::string::npos ? "" : req->target.substr(q + 1);
              if (req->method != "GET" || path != opt_.path || key.empty() ||
                  lower(req->header("upgrade")) != "websocket") {
                c.queue.push_back(as_bytes("HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"));
                c.closing = true;
              } else {
                c.queue.push_back(as_bytes("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                                           "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                                           accept_key(key) + "\r\n\r\n"));
                c.open = true;
                c.subscribed = query.find("frames=off") == std::string::npos;
                ++clients_;
                if (c.subscribed) ++subscribers_;
              }
            }
          } else {
            c.decoder.feed(bytes);
            while (auto f = c.decoder.next()) {
              switch (f->opcode) {
                case Opcode::Ping:
                  c.queue.push_back(encode_frame(Opcode::Pong, f->payload));
                  break;
                case Opcode::Close:
                  c.queue.push_back(encode_frame(Opcode::Close, {}));
                  c.closing = true;
                  break;
                case Opcode::Text:
                case Opcode::Continuation:
                  c.message.insert(c.message.end(), f->payload.begin(), f->payload.end());
                  if (f->fin) {
                    const std::string text(c.message.begin(), c.message.end());
                    c.message.clear();
                    if (handler_) {
                      if (auto reply = handler_(text)) c.queue.push_back(encode_frame(Opcode::Text, as_bytes(*reply)));
                    }
                  }
                  break;
                default:
                  break;
              }
            }
          }
        }
        while (!c.queue.empty()) {
          const auto& front = c.queue.front();
          const long n = c.stream.try_write(std::span(front).subspan(c.sent_of_front));
          if (n < 0) break;
          c.sent_of_front += static_cast<std::size_t>(n);
          if (c.sent_of_front < front.size()) break;
          c.queue.pop_front();
          c.sent_of_front = 0;
        }
        if (c.closing && c.queue.empty()) drop(c);
      } catch (const Error&) {
        drop(c);
      }
    }
    clients.remove_if([&](const Client& c) {
      if (c.stream.valid()) return false;
      if (c.open) {
        --clients_;
        if (c.subscribed) --subscribers_;
      }
      return true;
    });
  }
}

Client Client::connect(const net::Endpoint& server, const std::string& path, int timeout_ms) {
  Client c;
  c.stream_ = net::TcpStream::connect(server, timeout_ms);
  const std::string key = "Z2VlZy1saXZlLWNsaWVudA==";
  const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + server.str() +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                          "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  c.stream_.write_all(as_bytes(req));
  std::string head;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  std::size_t end = std::string::npos;
  while ((end = head.find("\r\n\r\n")) == std::string::npos) {
    if (std::chrono::steady_clock::now() > deadline) throw Error(ErrorCode::Protocol, "websocket upgrade timed out");
    const auto bytes = c.stream_.read_some(4096, 50);
    head.append(bytes.begin(), bytes.end());
  }
  if (head.rfind("HTTP/1.1 101", 0) != 0 || head.find(accept_key(key)) == std::string::npos) {
    throw Error(ErrorCode::Protocol, "websocket upgrade rejected: " + head.substr(0, head.find("\r\n")));
  }
  c.decoder_.feed(as_bytes(std::string_view(head).substr(end + 4)));
  return c;
}

void Client::send_text(const std::string& text) {
  mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
  stream_.write_all(encode_frame(Opcode::Text, as_bytes(text), mask_seed_));
}

std::optional<std::string> Client::receive(int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  Bytes message;
  for (;;) {
    while (auto f = decoder_.next()) {
      if (f->opcode == Opcode::Ping) {
        mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
        stream_.write_all(encode_frame(Opcode::Pong, f->payload, mask_seed_));
      } else if (f->opcode == Opcode::Close) {
        throw Error(ErrorCode::Io, "websocket closed by server");
      } else if (f->opcode == Opcode::Text || f->opcode == Opcode::Continuation) {
        message.insert(message.end(), f->payload.begin(), f->payload.end());
        if (f->fin) return std::string(message.begin(), message.end());
      }
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    decoder_.feed(stream_.read_some(65536, static_cast<int>(left.count())));
  }
}

void Client::close() {
  if (!stream_.valid()) return;
  try {
    mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
    stream_.write_all(encode_frame(Opcode::Close, {}, mask_seed_));
  } catch (const Error&) {
  }
  stream_.close();
}

}  // namespace geeg::ws
