#include "pcsel/service.hpp"

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pcsel/errors.hpp"
#include "pcsel/kitti.hpp"

namespace pcsel::service {
namespace {

using std::chrono::milliseconds;
using std::chrono::steady_clock;

// --- loopback transport --------------------------------------------------

// One direction of the in-memory pair.
struct ByteQueue {
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<std::uint8_t> bytes;
  bool closed = false;

  void push(const std::uint8_t* data, std::size_t size) {
    {
      std::lock_guard lock(mutex);
      if (closed) {
        throw Error(ErrorCode::io_failure, "send on closed loopback stream");
      }
      bytes.insert(bytes.end(), data, data + size);
    }
    ready.notify_all();
  }

  std::size_t pop_some(std::uint8_t* buf, std::size_t max,
                       milliseconds timeout) {
    std::unique_lock lock(mutex);
    if (!ready.wait_for(lock, timeout,
                        [this] { return !bytes.empty() || closed; })) {
      throw Error(ErrorCode::timeout, "loopback recv timed out");
    }
    if (bytes.empty()) return 0;  // closed and drained
    std::size_t n = std::min(max, bytes.size());
    for (std::size_t i = 0; i < n; ++i) {
      buf[i] = bytes.front();
      bytes.pop_front();
    }
    return n;
  }

  void close() {
    {
      std::lock_guard lock(mutex);
      closed = true;
    }
    ready.notify_all();
  }
};

class LoopbackTransport final : public Transport {
 public:
  LoopbackTransport(std::shared_ptr<ByteQueue> out,
                    std::shared_ptr<ByteQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  ~LoopbackTransport() override { out_->close(); }

  void send(const std::uint8_t* data, std::size_t size) override {
    out_->push(data, size);
  }
  using Transport::send;

  std::size_t recv_some(std::uint8_t* buf, std::size_t max,
                        milliseconds timeout) override {
    return in_->pop_some(buf, max, timeout);
  }

  void close() override { out_->close(); }

 private:
  std::shared_ptr<ByteQueue> out_;
  std::shared_ptr<ByteQueue> in_;
};

// --- TCP transport --------------------------------------------------------

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(int fd) : fd_(fd) {}

  ~TcpTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const std::uint8_t* data, std::size_t size) override {
    std::size_t sent = 0;
    while (sent < size) {
      ssize_t n = ::send(fd_, data + sent, size - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::io_failure,
                    std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }
  using Transport::send;

  std::size_t recv_some(std::uint8_t* buf, std::size_t max,
                        milliseconds timeout) override {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0) {
      throw Error(ErrorCode::io_failure,
                  std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) throw Error(ErrorCode::timeout, "recv timed out");
    ssize_t n = ::recv(fd_, buf, max, 0);
    if (n < 0) {
      throw Error(ErrorCode::io_failure,
                  std::string("recv failed: ") + std::strerror(errno));
    }
    return static_cast<std::size_t>(n);
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }

 private:
  int fd_;
};

sockaddr_in make_address(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  std::string numeric = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, numeric.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::io_failure, "cannot parse IPv4 host " + host);
  }
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>>
make_loopback_transport() {
  auto a_to_b = std::make_shared<ByteQueue>();
  auto b_to_a = std::make_shared<ByteQueue>();
  return {std::make_unique<LoopbackTransport>(a_to_b, b_to_a),
          std::make_unique<LoopbackTransport>(b_to_a, a_to_b)};
}

std::vector<std::uint8_t> read_frame(Transport& transport,
                                     milliseconds timeout) {
  const auto deadline = steady_clock::now() + timeout;
  std::vector<std::uint8_t> frame;
  std::size_t want = 8;

  while (frame.size() < want) {
    auto left = std::chrono::duration_cast<milliseconds>(
        deadline - steady_clock::now());
    if (left <= milliseconds::zero()) {
      throw Error(ErrorCode::timeout, "frame not complete before deadline");
    }
    std::uint8_t buf[4096];
    std::size_t n = transport.recv_some(
        buf, std::min(sizeof(buf), want - frame.size()), left);
    if (n == 0) {
      if (frame.empty()) {
        throw Error(ErrorCode::io_failure,
                    "stream closed before any frame byte");
      }
      throw Error(ErrorCode::truncated, "stream closed mid-frame");
    }
    frame.insert(frame.end(), buf, buf + n);
    if (frame.size() == 8 && want == 8) {
      std::uint32_t declared = 0;
      for (int i = 0; i < 4; ++i) declared = (declared << 8) | frame[4 + i];
      want = 8 + declared;
    }
  }
  return frame;
}

HandleResult cloud_handle(const CloudServerState& state,
                          const wire::SelectionRequest& request) {
  // Malformed input -> code 2.
  std::vector<PointCloud> frames;
  try {
    if (request.sample_frames.empty()) {
      throw Error(ErrorCode::empty_stream, "request carries no sample frames");
    }
    frames.reserve(request.sample_frames.size());
    for (std::size_t i = 0; i < request.sample_frames.size(); ++i) {
      frames.push_back(read_velodyne_bin(request.sample_frames[i],
                                         "frame-" + std::to_string(i)));
    }
  } catch (const Error& e) {
    return wire::ErrorReply{2, e.what()};
  }

  try {
    DataFeatures features = analyze_stream(frames, state.reference,
                                           request.declared_noise_sigma);
    TargetData target{request.target_classes, request.latency_budget_s};
    SelectionDecision decision =
        select(target, features, state.registry, state.thresholds,
               state.size_table);

    wire::ModelAssignment assignment;
    assignment.model_id = decision.model.model_id;
    assignment.method = decision.model.method;
    assignment.train = decision.model.train_degradation;
    assignment.branch_trace = decision.trace;
    return assignment;
  } catch (const Error& e) {
    // Selection failures (no candidate, unknown class, bad target) -> 1.
    return wire::ErrorReply{1, e.what()};
  }
}

void serve_connection(const CloudServerState& state, Transport& transport,
                      milliseconds timeout) {
  wire::ErrorReply fault;
  try {
    std::vector<std::uint8_t> frame = read_frame(transport, timeout);
    wire::WireMessage msg = wire::decode(frame);
    if (const auto* req = std::get_if<wire::SelectionRequest>(&msg)) {
      HandleResult result = cloud_handle(state, *req);
      std::visit(
          [&transport](const auto& reply) {
            transport.send(wire::encode(reply));
          },
          result);
      return;
    }
    fault = wire::ErrorReply{2, "expected a SelectionRequest"};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io_failure) return;  // peer gone; nothing to say
    fault = wire::ErrorReply{2, e.what()};
  }
  try {
    transport.send(wire::encode(wire::WireMessage(fault)));
  } catch (const Error&) {
    // Peer already gone; the reply had no one to reach.
  }
}

HandleResult edge_session(
    Transport& transport, const TargetData& target,
    const std::vector<std::vector<std::uint8_t>>& sample_frames,
    std::optional<double> declared_noise_sigma, milliseconds timeout) {
  wire::SelectionRequest request;
  request.target_classes = target.classes;
  request.latency_budget_s = target.latency_budget_s;
  request.sample_frames = sample_frames;
  request.declared_noise_sigma = declared_noise_sigma;
  transport.send(wire::encode(wire::WireMessage(request)));

  std::vector<std::uint8_t> frame;
  try {
    frame = read_frame(transport, timeout);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::truncated) {
      throw Error(ErrorCode::protocol_violation,
                  std::string("reply cut short: ") + e.what());
    }
    throw;  // Timeout and IoFailure keep their codes
  }

  wire::WireMessage msg;
  try {
    msg = wire::decode(frame);
  } catch (const Error& e) {
    throw Error(ErrorCode::protocol_violation,
                std::string("bad reply frame: ") + e.what());
  }
  if (auto* assignment = std::get_if<wire::ModelAssignment>(&msg)) {
    return std::move(*assignment);
  }
  if (auto* error = std::get_if<wire::ErrorReply>(&msg)) {
    return std::move(*error);
  }
  throw Error(ErrorCode::protocol_violation,
              "reply is neither ModelAssignment nor ErrorReply");
}

// --- TCP server -------------------------------------------------------

TcpServer::TcpServer(CloudServerState state, const std::string& host,
                     std::uint16_t port, milliseconds session_timeout)
    : state_(std::move(state)), host_(host), session_timeout_(session_timeout) {
  sockaddr_in addr = make_address(host, port);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(ErrorCode::io_failure,
                std::string("socket failed: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) <
      0) {
    int err = errno;
    ::close(listen_fd_);
    throw Error(ErrorCode::io_failure,
                std::string("bind failed: ") + std::strerror(err));
  }
  if (::listen(listen_fd_, 64) < 0) {
    int err = errno;
    ::close(listen_fd_);
    throw Error(ErrorCode::io_failure,
                std::string("listen failed: ") + std::strerror(err));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) {
    if (acceptor_.joinable()) acceptor_.join();
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(sessions_mutex_);
  for (std::thread& t : sessions_) {
    if (t.joinable()) t.join();
  }
  sessions_.clear();
}

void TcpServer::accept_loop() {
  while (!stopping_.load()) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener closed (stop) or fatal
    }
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace_back([this, fd] {
      TcpTransport transport(fd);
      try {
        serve_connection(state_, transport, session_timeout_);
      } catch (...) {
        // A session must never take the server down.
      }
    });
  }
}

std::unique_ptr<Transport> tcp_connect(const std::string& host,
                                       std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw Error(ErrorCode::io_failure,
                std::string("socket failed: ") + std::strerror(errno));
  }
  sockaddr_in addr = make_address(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    int err = errno;
    ::close(fd);
    throw Error(ErrorCode::io_failure,
                std::string("connect failed: ") + std::strerror(err));
  }
  return std::make_unique<TcpTransport>(fd);
}

// --- config -----------------------------------------------------------

ServerConfig parse_server_config(const std::string& text) {
  ServerConfig config;
  bool have_registry = false, have_reference = false, have_listen = false;

  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::malformed_line,
                  "config line " + std::to_string(line_no) + " has no '='");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    auto as_double = [&](double& slot) {
      try {
        std::size_t used = 0;
        slot = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::malformed_line,
                    "config line " + std::to_string(line_no) +
                        ": bad number '" + value + "'");
      }
    };

    if (key == "registry") {
      config.registry_path = value;
      have_registry = true;
    } else if (key == "reference") {
      config.reference_path = value;
      have_reference = true;
    } else if (key == "listen") {
      const std::size_t colon = value.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::malformed_line,
                    "listen endpoint must be host:port, got '" + value + "'");
      }
      config.host = value.substr(0, colon);
      const std::string port_text = value.substr(colon + 1);
      try {
        std::size_t used = 0;
        unsigned long port = std::stoul(port_text, &used);
        if (used != port_text.size() || port > 65535) {
          throw std::out_of_range(port_text);
        }
        config.port = static_cast<std::uint16_t>(port);
      } catch (const std::exception&) {
        throw Error(ErrorCode::malformed_line,
                    "bad listen port '" + port_text + "'");
      }
      have_listen = true;
    } else if (key == "threshold.large_object_min_length_m") {
      as_double(config.thresholds.large_object_min_length_m);
    } else if (key == "threshold.low_density_max_ratio") {
      as_double(config.thresholds.low_density_max_ratio);
    } else if (key == "threshold.severe_noise_min_sigma") {
      as_double(config.thresholds.severe_noise_min_sigma);
    } else if (key == "threshold.close_density_rel_tol") {
      as_double(config.thresholds.close_density_rel_tol);
    } else if (key == "threshold.close_noise_abs_tol_m") {
      as_double(config.thresholds.close_noise_abs_tol_m);
    } else {
      throw Error(ErrorCode::malformed_line,
                  "unknown config key '" + key + "'");
    }
  }

  if (!have_registry || !have_reference || !have_listen) {
    throw Error(ErrorCode::missing_key,
                "config needs registry, reference and listen");
  }
  config.thresholds.validate();
  return config;
}

}  // namespace pcsel::service
