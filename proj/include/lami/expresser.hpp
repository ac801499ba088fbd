#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lami/animation.hpp"
#include "lami/clock.hpp"
#include "lami/scene.hpp"

namespace lami {

enum class Origin { deliberate, reactive };

std::string_view to_string(Origin origin);

struct ExpressionRequest {
  std::optional<std::string> head_motion;
  std::optional<std::string> ears_lid_motion;
  std::optional<std::string> gazed_target;
  Origin origin = Origin::deliberate;

  bool empty() const { return !head_motion && !ears_lid_motion && !gazed_target; }
};

class ExpressionError : public Error {
 public:
  using Error::Error;
};

struct GazeAngles {
  double pan = 0.0;   // degrees, positive toward +yaw
  double tilt = 0.0;  // degrees, positive up
};

// Pan/tilt that point the robot head at `target` (object bounds center or
// person head). Throws LookupError for unknown names.
GazeAngles look_at(const Scene& scene, std::string_view target);

enum class CommandKind { gaze, head, ears_lid };

struct ScheduledCommand {
  std::uint64_t seq = 0;
  CommandKind kind = CommandKind::gaze;
  double offset = 0.0;  // seconds after the timeline start
  std::string name;     // clip name or gaze target
};

struct ScheduledTimeline {
  std::uint64_t id = 0;
  Origin origin = Origin::deliberate;
  std::string label;
  double start = 0.0;
  double duration = 0.0;
  bool loop = false;
  std::vector<ScheduledCommand> commands;  // gaze, then head, then ears/lid
};

enum class ReactiveKind { listening, thinking, success, failure, reset };

std::string_view to_string(ReactiveKind kind);

// Scheduler log entry. Commands carry the time at which they take effect.
struct SchedulerEvent {
  enum class Kind { command, preempted, suppressed, deferred, cancelled, ended, dropped };
  std::uint64_t seq = 0;
  double time = 0.0;
  Kind kind = Kind::command;
  Origin origin = Origin::deliberate;
  std::uint64_t timeline = 0;
  std::optional<CommandKind> command;
  std::string name;
};

struct ActuatorFrame {
  double timestamp = 0.0;
  double left_ear = 0.0;
  double right_ear = 0.0;
  double lid = 0.0;
  double pan = 0.0;
  double tilt = 0.0;
  std::string active_clip;                // empty at rest
  std::optional<Origin> source;           // layer that produced the frame

  bool at_rest() const {
    return active_clip.empty() && left_ear == 0 && right_ear == 0 && lid == 0 && pan == 0 && tilt == 0;
  }
};

inline constexpr std::string_view kActuatorCsvHeader = "timestamp,left_ear,right_ear,lid,pan,tilt,active_clip";
std::string to_csv_row(const ActuatorFrame& frame);

struct ExpresserConfig {
  double tick_hz = 50.0;
  double gaze_settle = 0.1;  // delay between a gaze command and the gestures it precedes
  double gaze_hold = 1.0;    // minimum life of a timeline that only gazes
  LimitTable limits;
  std::size_t subscriber_capacity = 256;
};

// Bounded per-subscriber frame queue; the oldest frame is dropped when full.
class FrameSubscription {
 public:
  explicit FrameSubscription(std::size_t capacity) : capacity_(capacity) {}

  std::optional<ActuatorFrame> try_pop();
  std::size_t dropped() const { return dropped_.load(); }
  void push(const ActuatorFrame& frame);

 private:
  std::mutex mutex_;
  std::deque<ActuatorFrame> frames_;
  std::size_t capacity_;
  std::atomic<std::size_t> dropped_{0};
};

// Arbitrates deliberate (planner-chosen) and reactive (rule-based)
// expressions and samples them into actuator frames.
//
// Deliberate timelines preempt a running reactive one at once. Reactive
// triggers are suppressed while a deliberate timeline runs. The thinking
// loop is deferred rather than suppressed: it starts as soon as both layers
// are idle and runs until stop_thinking().
//
// All public members are thread-safe. Timing uses the injected clock.
class Expresser {
 public:
  Expresser(ClipCatalog catalog, Clock& clock, ExpresserConfig config = {});

  // Validates and schedules a request. Deliberate requests with unknown
  // clips/targets throw ExpressionError; reactive ones are logged and dropped.
  ScheduledTimeline perform(const ExpressionRequest& request, const Scene& scene);

  // Fires a rule. `context` is the gaze target for listening (the speaker).
  // Returns nullopt when the trigger was suppressed, deferred or dropped.
  std::optional<ScheduledTimeline> reactive_trigger(ReactiveKind kind, const Scene& scene,
                                                    const std::optional<std::string>& context = std::nullopt);
  void stop_thinking();

  ActuatorFrame tick(double now);

  const ClipCatalog& catalog() const { return catalog_; }
  const ExpresserConfig& config() const { return config_; }
  double tick_period() const { return 1.0 / config_.tick_hz; }

  std::vector<SchedulerEvent> log() const;
  std::vector<ActuatorFrame> frames() const;
  bool deliberate_active() const;
  bool reactive_active() const;

  std::shared_ptr<FrameSubscription> subscribe();
  void unsubscribe(const std::shared_ptr<FrameSubscription>& subscription);

  // Every emitted frame is also written here as CSV (header written now).
  void set_csv_sink(std::ostream* out);

 private:
  struct Active {
    ScheduledTimeline schedule;
    std::optional<GazeAngles> gaze;
    std::optional<AnimationClip> head;
    double head_offset = 0.0;
    std::optional<AnimationClip> ears;
    double ears_offset = 0.0;
    ReactiveKind reactive_kind = ReactiveKind::reset;
  };

  Active build(const ExpressionRequest& request, const Scene& scene, double now, Origin origin);
  static bool running(const std::optional<Active>& a, double now);
  void expire(double now);
  void start_thinking_if_idle(double now);
  void record(SchedulerEvent::Kind kind, double time, const Active& active, std::string name = {});
  void log_commands(const Active& active);
  double sample_channel(const Active& active, Channel channel, double now, bool* driven) const;

  ClipCatalog catalog_;
  Clock& clock_;
  ExpresserConfig config_;

  mutable std::mutex mutex_;
  std::optional<Active> deliberate_;
  std::optional<Active> reactive_;
  bool thinking_pending_ = false;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_timeline_ = 1;
  std::vector<SchedulerEvent> log_;
  std::vector<ActuatorFrame> frames_;
  std::vector<std::shared_ptr<FrameSubscription>> subscribers_;
  std::ostream* csv_ = nullptr;
};

// Drives Expresser::tick at a fixed rate on its own thread.
class Ticker {
 public:
  Ticker(Expresser& expresser, Clock& clock);
  ~Ticker();

  Ticker(const Ticker&) = delete;
  Ticker& operator=(const Ticker&) = delete;

  void start();
  void stop();

 private:
  Expresser& expresser_;
  Clock& clock_;
  std::atomic<bool> running_{false};
  std::thread thread_;
};

// Ticks `expresser` at every tick boundary in (from, to]; pair with
// VirtualClock::set_listener for deterministic runs.
void tick_through(Expresser& expresser, double from, double to);

}  // namespace lami
