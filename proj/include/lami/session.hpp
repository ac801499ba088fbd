#pragma once

#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "lami/animation.hpp"
#include "lami/bridge.hpp"
#include "lami/clock.hpp"
#include "lami/expresser.hpp"
#include "lami/fixture.hpp"
#include "lami/llm_backend.hpp"
#include "lami/narrator.hpp"
#include "lami/planner.hpp"
#include "lami/scene.hpp"
#include "lami/thought_log.hpp"

namespace lami {

// Operator protocol. One command per line:
//   say <sender> <receiver> <utterance...>
//   busy <person> <reason...>
//   idle <person>
//   move <object> <x> <y> <z>
//   tilt <object> <target|none>
//   hold <person> <object|none>
//   quit
struct SayCommand {
  std::string sender;
  std::string receiver;
  std::string utterance;
};
struct BusyCommand {
  std::string person;
  std::string reason;
};
struct IdleCommand {
  std::string person;
};
struct MoveCommand {
  std::string object;
  Vec3 position;
};
struct TiltCommand {
  std::string object;
  std::optional<std::string> target;
};
struct HoldCommand {
  std::string person;
  std::optional<std::string> object;
};
struct QuitCommand {};

using OperatorCommand =
    std::variant<SayCommand, BusyCommand, IdleCommand, MoveCommand, TiltCommand, HoldCommand, QuitCommand>;

class CommandError : public Error {
 public:
  using Error::Error;
};

OperatorCommand parse_operator_line(const std::string& line);
std::string to_line(const OperatorCommand& command);
// event_injection and scene_edit payloads; throws CommandError otherwise.
OperatorCommand command_from_bridge(const BridgeMessage& message);

bool is_scene_edit(const OperatorCommand& command);
// Applies a non-speech command. Throws CommandError / LookupError.
void apply_scene_edit(Scene& scene, const OperatorCommand& command);

struct SessionConfig {
  std::string scenario_path;
  std::string guidance_path;  // empty: built-in defaults
  std::string clips_dir;
  BackendConfig backend;
  std::optional<GranularityTier> granularity_tier;  // overrides the guidance file
  std::optional<std::uint16_t> bridge_port;         // nullopt: no bridge
  std::string log_dir;                              // empty: nothing written
  ExpresserConfig expresser;
  // With a virtual clock, time advanced after each round so that the
  // expressions it started play out in the logs.
  double settle_after_round = 2.0;
};

// Owns the scene and runs planner rounds. The orchestrator is the only
// writer of scene, transcript and thought log; the expresser ticker and the
// bridge run on their own threads and talk to it through messages.
class Session {
 public:
  // Loads and validates every input. Throws ConfigError naming the file.
  // `backend` overrides config.backend when given.
  Session(SessionConfig config, Clock& clock, std::unique_ptr<ChatBackend> backend = nullptr,
          std::ostream* console = nullptr);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Thread-safe producers.
  void post(OperatorCommand command);
  void post_line(const std::string& line);
  void close_input();

  // Orchestrator loop: runs until quit or closed input with an empty queue.
  void run();

  // Synchronous entry points (the loop uses these too). Scene edits that
  // start a pour trigger a round and return it.
  std::optional<QueryRound> handle(const OperatorCommand& command);
  QueryRound run_trigger(const std::string& trigger, const std::optional<std::string>& speaker);
  // Applies and records a scene edit without event detection.
  void apply_edit(const OperatorCommand& command);

  // Lets virtual time pass so pending expressions finish.
  void settle(double seconds);
  void shutdown();

  const Scene& scene() const { return scene_; }
  const Transcript& transcript() const { return planner_->transcript(); }
  const ThoughtLog& thoughts() const { return thoughts_; }
  Expresser& expresser() { return *expresser_; }
  const Registry& registry() const { return registry_; }
  const std::string& system_message() const { return system_message_; }
  const GuidanceConfig& guidance() const { return guidance_; }
  BridgeServer* bridge() { return bridge_.get(); }
  std::vector<std::string> spoken() const { return spoken_; }
  Fixture recorded_fixture() const;

 private:
  void broadcast(const BridgeMessage& message);
  void broadcast_status();
  void say(const std::string& text);
  PlannerHooks make_hooks();

  SessionConfig config_;
  Clock& clock_;
  std::ostream* console_;
  Scene scene_;
  GuidanceConfig guidance_;
  std::unique_ptr<Expresser> expresser_;
  Registry registry_;
  std::string system_message_;
  std::unique_ptr<ChatBackend> backend_;
  std::unique_ptr<Planner> planner_;
  ThoughtLog thoughts_;
  std::vector<std::string> spoken_;
  std::vector<std::string> pending_edits_;

  std::unique_ptr<Ticker> ticker_;
  std::unique_ptr<BridgeServer> bridge_;
  std::shared_ptr<FrameSubscription> bridge_frames_;
  std::thread frame_pump_;
  std::atomic<bool> pumping_{false};

  std::ofstream transcript_log_;
  std::ofstream thought_log_;
  std::ofstream actuator_csv_;

  RoundStatus status_;
  std::size_t current_round_ = 0;
  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::optional<OperatorCommand>> queue_;  // nullopt: snapshot request
  bool input_closed_ = false;
  bool shut_down_ = false;
  bool virtual_time_ = false;
};

struct ReplayReport {
  std::size_t completions = 0;
  std::vector<std::string> diffs;  // first entry is the first divergence
  std::vector<std::string> warnings;
  Transcript transcript;

  bool ok() const { return diffs.empty(); }
  std::string summary() const;
};

struct ReplayOptions {
  std::string clips_dir;
  std::string scenario_override;  // replaces the fixture's scenario
  std::string guidance_override;
  std::string log_dir;
};

// Replays a fixture under the scripted backend on a virtual clock and
// compares every result string and dispatch order with the fixture.
ReplayReport replay_fixture(const std::string& fixture_path, const ReplayOptions& options);

}  // namespace lami
