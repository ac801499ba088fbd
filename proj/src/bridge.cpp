#include "lami/bridge.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace lami {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"state_snapshot", "actuator_frame", "thought_line",
                                                        "event_injection", "scene_edit",    "round_status"};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

std::string_view to_string(BridgeKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<BridgeKind> bridge_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<BridgeKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(RoundPhase phase) {
  switch (phase) {
    case RoundPhase::idle: return "idle";
    case RoundPhase::pending: return "pending";
    case RoundPhase::dispatching: return "dispatching";
  }
  return "idle";
}

std::string encode(const BridgeMessage& message) {
  nlohmann::ordered_json doc;
  doc["v"] = kBridgeVersion;
  doc["kind"] = to_string(message.kind);
  doc["data"] = message.data;
  return doc.dump();
}

BridgeMessage decode(std::string_view line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("message is not valid JSON");
  }
  if (!doc.is_object()) throw ProtocolError("message must be a JSON object");
  if (!doc.contains("v") || !doc.at("v").is_number_integer()) throw ProtocolError("message has no version field");
  if (doc.at("v").get<int>() != kBridgeVersion) {
    throw ProtocolError("unsupported protocol version " + doc.at("v").dump() + " (expected " +
                        std::to_string(kBridgeVersion) + ")");
  }
  if (!doc.contains("kind") || !doc.at("kind").is_string()) throw ProtocolError("message has no kind");
  const auto kind = bridge_kind_from_string(doc.at("kind").get<std::string>());
  if (!kind) throw ProtocolError("unknown message kind '" + doc.at("kind").get<std::string>() + "'");
  BridgeMessage out;
  out.kind = *kind;
  if (doc.contains("data")) {
    if (!doc.at("data").is_object()) throw ProtocolError("data must be an object");
    out.data = doc.at("data");
  }
  return out;
}

nlohmann::json status_json(const RoundStatus& status) {
  return {{"phase", to_string(status.phase)}, {"round", status.round}, {"queued", status.queued}};
}

BridgeMessage snapshot_message(const Scene& scene, const RoundStatus& status) {
  return {BridgeKind::state_snapshot, {{"scene", scene_to_json(scene)}, {"round_status", status_json(status)}}};
}

BridgeMessage frame_message(const ActuatorFrame& f) {
  nlohmann::json data = {{"timestamp", f.timestamp}, {"left_ear", f.left_ear}, {"right_ear", f.right_ear},
                         {"lid", f.lid},             {"pan", f.pan},           {"tilt", f.tilt},
                         {"active_clip", f.active_clip}};
  data["source"] = f.source ? nlohmann::json(to_string(*f.source)) : nlohmann::json(nullptr);
  return {BridgeKind::actuator_frame, std::move(data)};
}

BridgeMessage thought_message(const ThoughtLine& line) {
  return {BridgeKind::thought_line, nlohmann::json::parse(to_json(line).dump())};
}

BridgeMessage status_message(const RoundStatus& status) { return {BridgeKind::round_status, status_json(status)}; }

struct BridgeServer::Client {
  int fd = -1;
  std::string inbound;
  std::string outbound;
};

BridgeServer::BridgeServer(std::uint16_t port, MessageHandler on_message, ConnectHandler on_connect,
                           std::size_t max_backlog)
    : on_message_(std::move(on_message)), on_connect_(std::move(on_connect)), max_backlog_(max_backlog) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(errno_text("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 || ::listen(listen_fd_, 8) < 0) {
    const std::string message = errno_text("bridge bind");
    ::close(listen_fd_);
    throw Error(message + " (port " + std::to_string(port) + ")");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);
  if (::pipe(wake_pipe_) < 0) {
    ::close(listen_fd_);
    throw Error(errno_text("pipe"));
  }
  set_nonblocking(wake_pipe_[0]);
  set_nonblocking(wake_pipe_[1]);
  thread_ = std::thread([this] { run(); });
}

BridgeServer::~BridgeServer() { stop(); }

void BridgeServer::stop() {
  if (!running_.exchange(false)) return;
  wake();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  for (auto& c : clients_) ::close(c->fd);
  clients_.clear();
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

void BridgeServer::wake() {
  const char byte = 1;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &byte, 1);
}

std::size_t BridgeServer::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

void BridgeServer::broadcast(const BridgeMessage& message) {
  const std::string line = encode(message) + "\n";
  {
    std::lock_guard lock(mutex_);
    for (auto& c : clients_) {
      if (c->outbound.size() + line.size() > max_backlog_) {
        ++dropped_;
        continue;
      }
      c->outbound += line;
    }
  }
  wake();
}

void BridgeServer::run() {
  std::vector<pollfd> fds;
  std::vector<std::shared_ptr<Client>> polled;
  while (running_.load()) {
    fds.clear();
    polled.clear();
    fds.push_back({listen_fd_, POLLIN, 0});
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    {
      std::lock_guard lock(mutex_);
      for (auto& c : clients_) {
        fds.push_back({c->fd, static_cast<short>(POLLIN | (c->outbound.empty() ? 0 : POLLOUT)), 0});
        polled.push_back(c);
      }
    }
    if (::poll(fds.data(), fds.size(), 200) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents & POLLIN) {
      char drain[64];
      while (::read(wake_pipe_[0], drain, sizeof(drain)) > 0) {
      }
    }
    if (fds[0].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        auto client = std::make_shared<Client>();
        client->fd = fd;
        {
          std::lock_guard lock(mutex_);
          clients_.push_back(client);
        }
        if (on_connect_) on_connect_();
      }
    }
    std::vector<std::shared_ptr<Client>> closed;
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < polled.size(); ++i) {
      auto& client = polled[i];
      const short revents = fds[i + 2].revents;
      bool dead = (revents & (POLLERR | POLLHUP | POLLNVAL)) != 0;
      if (revents & POLLIN) {
        char buffer[4096];
        const ssize_t n = ::read(client->fd, buffer, sizeof(buffer));
        if (n > 0) {
          client->inbound.append(buffer, static_cast<std::size_t>(n));
          for (auto pos = client->inbound.find('\n'); pos != std::string::npos; pos = client->inbound.find('\n')) {
            lines.push_back(client->inbound.substr(0, pos));
            client->inbound.erase(0, pos + 1);
          }
        } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) {
          dead = true;
        }
      }
      if (!dead && (revents & POLLOUT)) {
        std::lock_guard lock(mutex_);
        const ssize_t n = ::send(client->fd, client->outbound.data(), client->outbound.size(), MSG_NOSIGNAL);
        if (n > 0) {
          client->outbound.erase(0, static_cast<std::size_t>(n));
        } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          dead = true;
        }
      }
      if (dead) closed.push_back(client);
    }
    if (!closed.empty()) {
      std::lock_guard lock(mutex_);
      for (auto& c : closed) {
        ::close(c->fd);
        std::erase(clients_, c);
      }
    }
    for (const auto& line : lines) {
      if (line.empty()) continue;
      try {
        auto message = decode(line);
        if (on_message_) on_message_(message);
      } catch (const ProtocolError&) {
        ++rejected_;
      }
    }
  }
}

BridgeClient::BridgeClient(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(errno_text("socket"));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const std::string message = errno_text("connect");
    ::close(fd_);
    throw Error(message);
  }
}

BridgeClient::~BridgeClient() {
  if (fd_ >= 0) ::close(fd_);
}

void BridgeClient::send_line(const std::string& line) {
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw Error(errno_text("send"));
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> BridgeClient::read_line(double timeout_seconds) {
  using steady = std::chrono::steady_clock;
  const auto deadline = steady::now() + std::chrono::duration_cast<steady::duration>(
                                            std::chrono::duration<double>(timeout_seconds));
  for (;;) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - steady::now()).count();
    if (left <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left)) <= 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(fd_, chunk, sizeof(chunk));
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::optional<BridgeMessage> BridgeClient::wait_for(BridgeKind kind, double timeout_seconds) {
  using steady = std::chrono::steady_clock;
  const auto start = steady::now();
  for (;;) {
    const double elapsed = std::chrono::duration<double>(steady::now() - start).count();
    if (elapsed >= timeout_seconds) return std::nullopt;
    auto line = read_line(timeout_seconds - elapsed);
    if (!line) return std::nullopt;
    auto message = decode(*line);
    if (message.kind == kind) return message;
  }
}

}  // namespace lami
