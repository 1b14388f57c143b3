#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fleetloop/backend.hpp"
#include "fleetloop/protocol.hpp"

namespace fleetloop {

/// Vehicle-side view of the communication channel.
class BackendChannel {
 public:
  virtual ~BackendChannel() = default;

  /// Fire-and-forget measurement upload.
  virtual void send_measurement(const MeasurementPackage& pkg) = 0;

  /// Blocking parameter request round trip.
  virtual ParamReply request_parameters(const ParamRequest& request) = 0;

  /// Raw frame of the most recent reply; used by fleet-consistency checks.
  virtual const std::vector<std::uint8_t>& last_reply_frame() const = 0;
};

/// In-process channel for simulation and tests. Every message still round
/// trips through the codec, so wire behavior is exercised end to end.
class LoopbackChannel : public BackendChannel {
 public:
  explicit LoopbackChannel(BackendCore& core) : core_(core) {}

  void send_measurement(const MeasurementPackage& pkg) override;
  ParamReply request_parameters(const ParamRequest& request) override;
  const std::vector<std::uint8_t>& last_reply_frame() const override {
    return last_reply_frame_;
  }

 private:
  BackendCore& core_;
  std::vector<std::uint8_t> last_reply_frame_;
};

/// One TCP connection to a backend server, protocol v1 framing.
class TcpChannel : public BackendChannel {
 public:
  TcpChannel(const std::string& host, std::uint16_t port);
  ~TcpChannel() override;

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send_measurement(const MeasurementPackage& pkg) override;
  ParamReply request_parameters(const ParamRequest& request) override;
  const std::vector<std::uint8_t>& last_reply_frame() const override {
    return last_reply_frame_;
  }

 private:
  void write_all(const std::vector<std::uint8_t>& bytes);

  int fd_{-1};
  FrameReader reader_;
  std::vector<std::uint8_t> last_reply_frame_;
};

/// Accepting TCP server around a BackendCore. One session thread per
/// connection; a session that sends undecodable bytes is closed without
/// disturbing the others.
class TcpBackendServer {
 public:
  TcpBackendServer(BackendCore& core, const std::string& host,
                   std::uint16_t port);
  ~TcpBackendServer();

  TcpBackendServer(const TcpBackendServer&) = delete;
  TcpBackendServer& operator=(const TcpBackendServer&) = delete;

  std::uint16_t port() const { return port_; }
  std::string endpoint() const;
  void stop();

 private:
  void accept_loop();
  void session(int fd);

  BackendCore& core_;
  std::string host_;
  std::uint16_t port_{0};
  int listen_fd_{-1};
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex sessions_mu_;
  std::vector<std::thread> sessions_;
  std::vector<int> session_fds_;
};

/// "host:port" split helper for CLI flags. Throws std::invalid_argument.
std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& s);

}  // namespace fleetloop
