#include "fleetloop/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace fleetloop {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "*") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) {
    return addr;
  }
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || !result) {
    throw std::runtime_error("cannot resolve host \"" + host + "\"");
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  freeaddrinfo(result);
  return addr;
}

ParamReply decode_reply(FrameReader& reader, int fd) {
  while (true) {
    auto result = reader.next();
    if (result.status == DecodeStatus::kOk) {
      if (auto* reply = std::get_if<ParamReply>(&*result.message)) {
        return *reply;
      }
      throw std::runtime_error("backend sent a non-reply message");
    }
    if (result.status != DecodeStatus::kIncomplete) {
      throw std::runtime_error("undecodable backend reply: " +
                               std::string(to_string(result.status)) + " (" +
                               result.detail + ")");
    }
    std::uint8_t buf[4096];
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n == 0) throw std::runtime_error("backend closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv from backend failed");
    }
    reader.feed(std::span(buf, static_cast<std::size_t>(n)));
  }
}

}  // namespace

void LoopbackChannel::send_measurement(const MeasurementPackage& pkg) {
  const auto frame = encode(Message{pkg});
  auto decoded = decode(frame);
  if (decoded.status != DecodeStatus::kOk) {
    throw std::logic_error("loopback measurement failed to decode: " +
                           decoded.detail);
  }
  core_.store_measurement(std::get<MeasurementPackage>(*decoded.message));
}

ParamReply LoopbackChannel::request_parameters(const ParamRequest& request) {
  const auto frame = encode(Message{request});
  auto decoded = decode(frame);
  if (decoded.status != DecodeStatus::kOk) {
    throw std::logic_error("loopback request failed to decode: " +
                           decoded.detail);
  }
  const auto& req = std::get<ParamRequest>(*decoded.message);
  const ParamReply reply{core_.lookup_parameters(req.condition)};
  last_reply_frame_ = encode(Message{reply});
  auto reply_decoded = decode(last_reply_frame_);
  if (reply_decoded.status != DecodeStatus::kOk) {
    throw std::logic_error("loopback reply failed to decode: " +
                           reply_decoded.detail);
  }
  return std::get<ParamReply>(*reply_decoded.message);
}

TcpChannel::TcpChannel(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket failed");
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  const auto addr = resolve(host, port);
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) <
      0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    errno = err;
    throw_errno("connect to " + host + ":" + std::to_string(port) + " failed");
  }
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::write_all(const std::vector<std::uint8_t>& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n =
        ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send to backend failed");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void TcpChannel::send_measurement(const MeasurementPackage& pkg) {
  write_all(encode(Message{pkg}));
}

ParamReply TcpChannel::request_parameters(const ParamRequest& request) {
  write_all(encode(Message{request}));
  const ParamReply reply = decode_reply(reader_, fd_);
  last_reply_frame_ = encode(Message{reply});
  return reply;
}

TcpBackendServer::TcpBackendServer(BackendCore& core, const std::string& host,
                                   std::uint16_t port)
    : core_(core), host_(host.empty() ? "127.0.0.1" : host) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw_errno("socket failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto addr = resolve(host_, port);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr),
             sizeof(addr)) < 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = err;
    throw_errno("bind to " + host_ + ":" + std::to_string(port) + " failed");
  }
  if (::listen(listen_fd_, 64) < 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = err;
    throw_errno("listen failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

TcpBackendServer::~TcpBackendServer() { stop(); }

std::string TcpBackendServer::endpoint() const {
  return host_ + ":" + std::to_string(port_);
}

void TcpBackendServer::stop() {
  bool expected = true;
  if (!running_.compare_exchange_strong(expected, false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mu_);
    for (const int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
    sessions.swap(sessions_);
  }
  for (auto& t : sessions) {
    if (t.joinable()) t.join();
  }
}

void TcpBackendServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listen socket closed by stop()
    }
    std::lock_guard lock(sessions_mu_);
    session_fds_.push_back(fd);
    sessions_.emplace_back([this, fd] { session(fd); });
  }
}

void TcpBackendServer::session(int fd) {
  FrameReader reader;
  std::uint8_t buf[8192];
  bool open = true;
  while (open && running_) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n == 0) break;
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    reader.feed(std::span(buf, static_cast<std::size_t>(n)));
    while (open) {
      auto result = reader.next();
      if (result.status == DecodeStatus::kIncomplete) break;
      if (result.status != DecodeStatus::kOk) {
        // Undecodable client; drop this session, others are unaffected.
        open = false;
        break;
      }
      std::visit(
          [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, MeasurementPackage>) {
              try {
                core_.store_measurement(msg);
              } catch (const std::exception&) {
                // Persistence failure rejects the message; session continues.
              }
            } else if constexpr (std::is_same_v<T, ParamRequest>) {
              const ParamReply reply{core_.lookup_parameters(msg.condition)};
              const auto frame = encode(Message{reply});
              std::size_t sent = 0;
              while (sent < frame.size()) {
                const ssize_t w = ::send(fd, frame.data() + sent,
                                         frame.size() - sent, MSG_NOSIGNAL);
                if (w < 0) {
                  if (errno == EINTR) continue;
                  open = false;
                  break;
                }
                sent += static_cast<std::size_t>(w);
              }
            }
            // A ParamReply from a client is ignored.
          },
          *result.message);
    }
  }
  ::close(fd);
}

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw std::invalid_argument("endpoint must be host:port, got \"" + s +
                                "\"");
  }
  const std::string host = s.substr(0, colon);
  const std::string port_str = s.substr(colon + 1);
  int port = 0;
  for (const char c : port_str) {
    if (c < '0' || c > '9') {
      throw std::invalid_argument("endpoint port is not numeric: \"" + s +
                                  "\"");
    }
    port = port * 10 + (c - '0');
    if (port > 65535) {
      throw std::invalid_argument("endpoint port out of range: \"" + s + "\"");
    }
  }
  return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace fleetloop
