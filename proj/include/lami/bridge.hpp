#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/error.hpp"
#include "lami/expresser.hpp"
#include "lami/scene.hpp"
#include "lami/thought_log.hpp"

namespace lami {

inline constexpr int kBridgeVersion = 1;

enum class BridgeKind { state_snapshot, actuator_frame, thought_line, event_injection, scene_edit, round_status };

std::string_view to_string(BridgeKind kind);
std::optional<BridgeKind> bridge_kind_from_string(std::string_view text);

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct BridgeMessage {
  BridgeKind kind = BridgeKind::state_snapshot;
  nlohmann::json data = nlohmann::json::object();
};

// {"v":1,"kind":...,"data":{...}} on one line, without the newline.
std::string encode(const BridgeMessage& message);
// Throws ProtocolError for malformed JSON, a missing or different "v", or
// an unknown kind.
BridgeMessage decode(std::string_view line);

enum class RoundPhase { idle, pending, dispatching };
std::string_view to_string(RoundPhase phase);

struct RoundStatus {
  RoundPhase phase = RoundPhase::idle;
  std::size_t round = 0;   // index of the current or last round
  std::size_t queued = 0;  // triggers waiting behind it
};

BridgeMessage snapshot_message(const Scene& scene, const RoundStatus& status);
BridgeMessage frame_message(const ActuatorFrame& frame);
BridgeMessage thought_message(const ThoughtLine& line);
BridgeMessage status_message(const RoundStatus& status);

// Localhost TCP server. One I/O thread multiplexes all clients; broadcast()
// only queues bytes and never blocks on a slow client. A client whose
// backlog exceeds `max_backlog` bytes loses the message instead.
class BridgeServer {
 public:
  using MessageHandler = std::function<void(const BridgeMessage& message)>;
  using ConnectHandler = std::function<void()>;

  // Port 0 binds an ephemeral port. Throws Error when binding fails.
  BridgeServer(std::uint16_t port, MessageHandler on_message, ConnectHandler on_connect = {},
               std::size_t max_backlog = 1 << 20);
  ~BridgeServer();

  BridgeServer(const BridgeServer&) = delete;
  BridgeServer& operator=(const BridgeServer&) = delete;

  std::uint16_t port() const { return port_; }
  void broadcast(const BridgeMessage& message);
  std::size_t client_count() const;
  // Client lines rejected by decode().
  std::size_t rejected() const { return rejected_.load(); }
  std::size_t dropped() const { return dropped_.load(); }
  void stop();

 private:
  struct Client;
  void run();
  void wake();

  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::uint16_t port_ = 0;
  MessageHandler on_message_;
  ConnectHandler on_connect_;
  std::size_t max_backlog_;
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::atomic<bool> running_{true};
  std::atomic<std::size_t> rejected_{0};
  std::atomic<std::size_t> dropped_{0};
  std::thread thread_;
};

// Minimal blocking client, used by tests and scripts.
class BridgeClient {
 public:
  explicit BridgeClient(std::uint16_t port);
  ~BridgeClient();

  BridgeClient(const BridgeClient&) = delete;
  BridgeClient& operator=(const BridgeClient&) = delete;

  void send_line(const std::string& line);
  void send(const BridgeMessage& message) { send_line(encode(message)); }
  // Next line, or nullopt after `timeout_seconds` without one.
  std::optional<std::string> read_line(double timeout_seconds);
  // Reads until a message of `kind` arrives (skipping others).
  std::optional<BridgeMessage> wait_for(BridgeKind kind, double timeout_seconds);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace lami
