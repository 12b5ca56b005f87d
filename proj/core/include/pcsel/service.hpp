#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "pcsel/features.hpp"
#include "pcsel/registry.hpp"
#include "pcsel/selector.hpp"
#include "pcsel/wire.hpp"

// Cloud-side selection service and edge-side client: one SelectionRequest
// per connection, answered by exactly one ModelAssignment or ErrorReply.
// Sessions are independent; the server state never changes after startup,
// so any number of connections may be served concurrently.

namespace pcsel::service {

struct CloudServerState {
  ModelRegistry registry;
  ReferenceStats reference;
  SelectionThresholds thresholds;
  SizeTable size_table = SizeTable::defaults();
};

// The selection outcome for one request.  Failures map to stable codes:
// 1 = no candidate model, 2 = malformed request or frames.
using HandleResult = std::variant<wire::ModelAssignment, wire::ErrorReply>;

// Decodes the sample frames, analyzes them against the reference, runs the
// selection branches, and wraps the decision (or the failure) for the wire.
// Pure: identical requests yield identical results.
HandleResult cloud_handle(const CloudServerState& state,
                          const wire::SelectionRequest& request);

// A bidirectional byte stream.  Implementations: in-memory loopback pair
// (tests) and TCP (deployment).
class Transport {
 public:
  virtual ~Transport() = default;

  // Sends all bytes or throws IoFailure.
  virtual void send(const std::uint8_t* data, std::size_t size) = 0;
  void send(const std::vector<std::uint8_t>& bytes) {
    send(bytes.data(), bytes.size());
  }

  // Blocks up to `timeout` for at least one byte; returns the number of
  // bytes received, 0 when the peer has closed.  Throws Timeout.
  virtual std::size_t recv_some(std::uint8_t* buf, std::size_t max,
                                std::chrono::milliseconds timeout) = 0;

  // Ends the outgoing direction; the peer's recv_some sees end-of-stream.
  virtual void close() = 0;
};

// Connected in-memory pair: bytes sent on one end arrive at the other.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>
make_loopback_transport();

constexpr std::chrono::milliseconds kDefaultSessionTimeout{30000};

// Reads exactly one wire frame (header + declared payload).  Throws
// Timeout when the deadline passes, IoFailure when the stream closes
// before any byte, Truncated when it closes mid-frame.
std::vector<std::uint8_t> read_frame(Transport& transport,
                                     std::chrono::milliseconds timeout);

// Serves one connection: reads one frame, answers with the handle result
// or with exactly one code-2 ErrorReply on a malformed frame, then
// returns.  Never throws on client misbehavior.
void serve_connection(const CloudServerState& state, Transport& transport,
                      std::chrono::milliseconds timeout = kDefaultSessionTimeout);

// Client side: sends one SelectionRequest built from the arguments, awaits
// the single reply.  Transport failures before any reply byte surface as
// IoFailure (safe to retry); a reply cut short or malformed surfaces as
// ProtocolViolation; a missed deadline as Timeout.
HandleResult edge_session(
    Transport& transport, const TargetData& target,
    const std::vector<std::vector<std::uint8_t>>& sample_frames,
    std::optional<double> declared_noise_sigma = std::nullopt,
    std::chrono::milliseconds timeout = kDefaultSessionTimeout);

// --- TCP deployment ---------------------------------------------------

// Serves each accepted connection on its own thread until stop() (also
// run by the destructor).  Construction binds and listens; port 0 picks
// an ephemeral port, readable from port().
class TcpServer {
 public:
  // Throws IoFailure when binding fails.
  TcpServer(CloudServerState state, const std::string& host,
            std::uint16_t port,
            std::chrono::milliseconds session_timeout = kDefaultSessionTimeout);
  ~TcpServer();

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  std::uint16_t port() const { return port_; }
  const std::string& host() const { return host_; }
  void stop();

 private:
  void accept_loop();

  CloudServerState state_;
  std::string host_;
  std::uint16_t port_ = 0;
  std::chrono::milliseconds session_timeout_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex sessions_mutex_;
  std::vector<std::thread> sessions_;
};

// Throws IoFailure when the connection cannot be established.
std::unique_ptr<Transport> tcp_connect(const std::string& host,
                                       std::uint16_t port);

// --- server configuration ----------------------------------------------

// Key-value config, one `key=value` per line, '#' comments:
//
//   registry=<path>           (required)
//   reference=<path>          (required)
//   listen=<host>:<port>      (required; port 0 = ephemeral)
//   threshold.large_object_min_length_m=<float>   (optional, likewise the
//   other four SelectionThresholds fields)
struct ServerConfig {
  std::string registry_path;
  std::string reference_path;
  std::string host;
  std::uint16_t port = 0;
  SelectionThresholds thresholds;
};

// Throws MalformedLine, MissingKey, ConfigOutOfRange.
ServerConfig parse_server_config(const std::string& text);

}  // namespace pcsel::service
