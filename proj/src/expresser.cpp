#include "lami/expresser.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lami {

namespace {

std::string allowed_list(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

bool is_head_channel(Channel c) { return c == Channel::pan || c == Channel::tilt; }

}  // namespace

std::string_view to_string(Origin origin) { return origin == Origin::deliberate ? "deliberate" : "reactive"; }

std::string_view to_string(ReactiveKind kind) {
  switch (kind) {
    case ReactiveKind::listening: return "listening";
    case ReactiveKind::thinking: return "thinking";
    case ReactiveKind::success: return "success";
    case ReactiveKind::failure: return "failure";
    case ReactiveKind::reset: return "reset";
  }
  return "reset";
}

GazeAngles look_at(const Scene& scene, std::string_view target) {
  Vec3 point;
  if (const auto* o = scene.find_object(target)) {
    point = o->bounds.center;
  } else if (const auto* p = scene.find_person(target)) {
    point = p->head_pose.position;
  } else {
    throw LookupError(std::string(target), "unknown gaze target: " + std::string(target));
  }
  const Pose& head = scene.robot().head_pose;
  const Vec3 d = point - head.position;
  const double horizontal = std::hypot(d.x, d.y);
  if (horizontal == 0.0 && d.z == 0.0) return {};
  GazeAngles angles;
  angles.pan = horizontal == 0.0 ? 0.0 : rad_to_deg(wrap_angle(std::atan2(d.y, d.x) - head.yaw));
  angles.tilt = rad_to_deg(std::atan2(d.z, horizontal));
  return angles;
}

std::string to_csv_row(const ActuatorFrame& f) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "%.3f,%.4f,%.4f,%.4f,%.4f,%.4f,", f.timestamp, f.left_ear, f.right_ear, f.lid,
                f.pan, f.tilt);
  return std::string(buffer) + f.active_clip;
}

std::optional<ActuatorFrame> FrameSubscription::try_pop() {
  std::lock_guard lock(mutex_);
  if (frames_.empty()) return std::nullopt;
  ActuatorFrame f = std::move(frames_.front());
  frames_.pop_front();
  return f;
}

void FrameSubscription::push(const ActuatorFrame& frame) {
  std::lock_guard lock(mutex_);
  if (frames_.size() >= capacity_) {
    frames_.pop_front();
    ++dropped_;
  }
  frames_.push_back(frame);
}

Expresser::Expresser(ClipCatalog catalog, Clock& clock, ExpresserConfig config)
    : catalog_(std::move(catalog)), clock_(clock), config_(std::move(config)) {}

Expresser::Active Expresser::build(const ExpressionRequest& request, const Scene& scene, double now, Origin origin) {
  Active a;
  if (request.gazed_target) {
    const auto resolved = scene.resolve_entity(*request.gazed_target);
    if (!resolved) {
      throw ExpressionError("unknown gazed_target '" + *request.gazed_target +
                            "'; it must be an object or a person in the scene");
    }
    a.gaze = look_at(scene, *resolved);
  }
  if (request.head_motion) {
    const auto* clip = catalog_.find(*request.head_motion, ClipKind::head);
    if (!clip) {
      throw ExpressionError("unknown head_motion '" + *request.head_motion +
                            "'; allowed values: " + allowed_list(catalog_.names(ClipKind::head)));
    }
    a.head = *clip;
  }
  if (request.ears_lid_motion) {
    const auto* clip = catalog_.find(*request.ears_lid_motion, ClipKind::ears_lid);
    if (!clip) {
      throw ExpressionError("unknown ears_lid_motion '" + *request.ears_lid_motion +
                            "'; allowed values: " + allowed_list(catalog_.names(ClipKind::ears_lid)));
    }
    a.ears = *clip;
  }

  const double settle = a.gaze && (a.head || a.ears) ? config_.gaze_settle : 0.0;
  a.head_offset = settle;
  a.ears_offset = settle;

  auto& s = a.schedule;
  s.origin = origin;
  s.start = now;
  s.label = a.ears ? a.ears->name : a.head ? a.head->name : "gaze:" + *request.gazed_target;
  if (a.gaze) {
    s.commands.push_back({0, CommandKind::gaze, 0.0, *request.gazed_target});
    s.duration = config_.gaze_hold;
  }
  if (a.head) {
    s.commands.push_back({0, CommandKind::head, a.head_offset, a.head->name});
    s.duration = std::max(s.duration, a.head_offset + a.head->duration());
  }
  if (a.ears) {
    s.commands.push_back({0, CommandKind::ears_lid, a.ears_offset, a.ears->name});
    s.duration = std::max(s.duration, a.ears_offset + a.ears->duration());
  }
  return a;
}

void Expresser::record(SchedulerEvent::Kind kind, double time, const Active& active, std::string name) {
  SchedulerEvent e;
  e.seq = next_seq_++;
  e.time = time;
  e.kind = kind;
  e.origin = active.schedule.origin;
  e.timeline = active.schedule.id;
  e.name = name.empty() ? active.schedule.label : std::move(name);
  log_.push_back(std::move(e));
}

void Expresser::log_commands(const Active& active) {
  // Sequence numbers are assigned here, so within a timeline the gaze
  // command always precedes the gestures it is paired with.
  auto& commands = const_cast<Active&>(active).schedule.commands;
  for (auto& c : commands) {
    c.seq = next_seq_++;
    SchedulerEvent e;
    e.seq = c.seq;
    e.time = active.schedule.start + c.offset;
    e.kind = SchedulerEvent::Kind::command;
    e.origin = active.schedule.origin;
    e.timeline = active.schedule.id;
    e.command = c.kind;
    e.name = c.name;
    log_.push_back(std::move(e));
  }
}

bool Expresser::running(const std::optional<Active>& a, double now) {
  return a && (a->schedule.loop || now < a->schedule.start + a->schedule.duration);
}

void Expresser::expire(double now) {
  auto finished = [now](const std::optional<Active>& a) {
    return a && !a->schedule.loop && now >= a->schedule.start + a->schedule.duration;
  };
  if (finished(deliberate_)) {
    record(SchedulerEvent::Kind::ended, deliberate_->schedule.start + deliberate_->schedule.duration, *deliberate_);
    deliberate_.reset();
  }
  if (finished(reactive_)) {
    record(SchedulerEvent::Kind::ended, reactive_->schedule.start + reactive_->schedule.duration, *reactive_);
    reactive_.reset();
  }
}

void Expresser::start_thinking_if_idle(double now) {
  if (!thinking_pending_ || deliberate_ || reactive_) return;
  ExpressionRequest request;
  request.origin = Origin::reactive;
  request.head_motion = "thinking";
  request.ears_lid_motion = "blink";
  try {
    Active a = build(request, Scene{}, now, Origin::reactive);
    a.schedule.id = next_timeline_++;
    a.schedule.loop = true;
    a.schedule.label = "thinking";
    a.reactive_kind = ReactiveKind::thinking;
    log_commands(a);
    reactive_ = std::move(a);
  } catch (const Error&) {
    thinking_pending_ = false;
  }
}

ScheduledTimeline Expresser::perform(const ExpressionRequest& request, const Scene& scene) {
  const double now = clock_.now();
  std::lock_guard lock(mutex_);
  expire(now);

  if (request.origin == Origin::reactive) {
    Active a;
    try {
      a = build(request, scene, now, Origin::reactive);
    } catch (const Error& e) {
      Active dummy;
      dummy.schedule.origin = Origin::reactive;
      record(SchedulerEvent::Kind::dropped, now, dummy, e.what());
      return {};
    }
    if (deliberate_) {
      a.schedule.id = next_timeline_++;
      record(SchedulerEvent::Kind::suppressed, now, a);
      return {};
    }
    a.schedule.id = next_timeline_++;
    if (reactive_) record(SchedulerEvent::Kind::cancelled, now, *reactive_);
    log_commands(a);
    reactive_ = a;
    return a.schedule;
  }

  if (request.empty()) return {};
  Active a = build(request, scene, now, Origin::deliberate);
  a.schedule.id = next_timeline_++;
  if (reactive_) {
    record(SchedulerEvent::Kind::preempted, now, *reactive_);
    reactive_.reset();
  }
  if (deliberate_) record(SchedulerEvent::Kind::cancelled, now, *deliberate_);
  log_commands(a);
  deliberate_ = a;
  return a.schedule;
}

std::optional<ScheduledTimeline> Expresser::reactive_trigger(ReactiveKind kind, const Scene& scene,
                                                             const std::optional<std::string>& context) {
  const double now = clock_.now();
  std::lock_guard lock(mutex_);
  expire(now);

  Active marker;
  marker.schedule.origin = Origin::reactive;

  if (kind == ReactiveKind::thinking) {
    thinking_pending_ = true;
    if (reactive_ && reactive_->reactive_kind == ReactiveKind::thinking) return std::nullopt;
    if (deliberate_ || reactive_) {
      record(SchedulerEvent::Kind::deferred, now, marker, "thinking");
      return std::nullopt;
    }
    start_thinking_if_idle(now);
    return reactive_ ? std::optional(reactive_->schedule) : std::nullopt;
  }

  if (deliberate_) {
    record(SchedulerEvent::Kind::suppressed, now, marker, std::string(to_string(kind)));
    return std::nullopt;
  }

  ExpressionRequest request;
  request.origin = Origin::reactive;
  switch (kind) {
    case ReactiveKind::listening:
      request.gazed_target = context;
      request.ears_lid_motion = "listen_to_person";
      break;
    case ReactiveKind::success: request.ears_lid_motion = "confirm"; break;
    case ReactiveKind::failure: request.ears_lid_motion = "deny"; break;
    case ReactiveKind::reset: request.ears_lid_motion = "reset"; break;
    case ReactiveKind::thinking: break;
  }
  Active a;
  try {
    a = build(request, scene, now, Origin::reactive);
  } catch (const Error& e) {
    record(SchedulerEvent::Kind::dropped, now, marker, e.what());
    return std::nullopt;
  }
  a.schedule.id = next_timeline_++;
  a.reactive_kind = kind;
  if (reactive_) record(SchedulerEvent::Kind::cancelled, now, *reactive_);
  log_commands(a);
  reactive_ = a;
  return a.schedule;
}

void Expresser::stop_thinking() {
  const double now = clock_.now();
  std::lock_guard lock(mutex_);
  thinking_pending_ = false;
  if (reactive_ && reactive_->reactive_kind == ReactiveKind::thinking) {
    record(SchedulerEvent::Kind::cancelled, now, *reactive_);
    reactive_.reset();
  }
}

double Expresser::sample_channel(const Active& a, Channel channel, double now, bool* driven) const {
  double local = now - a.schedule.start;
  if (a.schedule.loop && a.schedule.duration > 0) local = std::fmod(local, a.schedule.duration);
  double value = 0.0;
  *driven = false;
  if (is_head_channel(channel)) {
    if (a.gaze) {
      *driven = true;
      value = channel == Channel::pan ? a.gaze->pan : a.gaze->tilt;
    }
    if (a.head && a.head->has_channel(channel)) {
      *driven = true;
      if (local >= a.head_offset) value += sample_clip(*a.head, channel, local - a.head_offset);
    }
  } else if (a.ears && a.ears->has_channel(channel)) {
    *driven = true;
    value = sample_clip(*a.ears, channel, std::max(0.0, local - a.ears_offset));
  }
  const auto& lim = config_.limits[static_cast<std::size_t>(channel)];
  return std::clamp(value, lim.min, lim.max);
}

ActuatorFrame Expresser::tick(double now) {
  std::lock_guard lock(mutex_);
  expire(now);
  start_thinking_if_idle(now);

  ActuatorFrame frame;
  frame.timestamp = now;
  double* slots[] = {&frame.left_ear, &frame.right_ear, &frame.lid, &frame.pan, &frame.tilt};
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    for (const auto* layer : {&deliberate_, &reactive_}) {
      if (!*layer) continue;
      bool driven = false;
      const double v = sample_channel(**layer, kAllChannels[i], now, &driven);
      if (driven) {
        *slots[i] = v;
        break;
      }
    }
  }
  if (const auto& top = deliberate_ ? deliberate_ : reactive_) {
    frame.active_clip = top->schedule.label;
    frame.source = top->schedule.origin;
  }

  frames_.push_back(frame);
  for (const auto& sub : subscribers_) sub->push(frame);
  if (csv_) *csv_ << to_csv_row(frame) << '\n';
  return frame;
}

std::vector<SchedulerEvent> Expresser::log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<ActuatorFrame> Expresser::frames() const {
  std::lock_guard lock(mutex_);
  return frames_;
}

// Judged against the clock so a timeline that ran out between ticks no longer
// counts, even before the next tick retires it.
bool Expresser::deliberate_active() const {
  const double now = clock_.now();
  std::lock_guard lock(mutex_);
  return running(deliberate_, now);
}

bool Expresser::reactive_active() const {
  const double now = clock_.now();
  std::lock_guard lock(mutex_);
  return running(reactive_, now);
}

std::shared_ptr<FrameSubscription> Expresser::subscribe() {
  auto sub = std::make_shared<FrameSubscription>(config_.subscriber_capacity);
  std::lock_guard lock(mutex_);
  subscribers_.push_back(sub);
  return sub;
}

void Expresser::unsubscribe(const std::shared_ptr<FrameSubscription>& subscription) {
  std::lock_guard lock(mutex_);
  std::erase(subscribers_, subscription);
}

void Expresser::set_csv_sink(std::ostream* out) {
  std::lock_guard lock(mutex_);
  csv_ = out;
  if (csv_) *csv_ << kActuatorCsvHeader << '\n';
}

Ticker::Ticker(Expresser& expresser, Clock& clock) : expresser_(expresser), clock_(clock) {}

Ticker::~Ticker() { stop(); }

void Ticker::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] {
    const double period = expresser_.tick_period();
    const double origin = clock_.now();
    for (std::uint64_t k = 0; running_.load(); ++k) {
      const double due = origin + static_cast<double>(k) * period;
      clock_.sleep_for(due - clock_.now());
      expresser_.tick(clock_.now());
    }
  });
}

void Ticker::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
}

void tick_through(Expresser& expresser, double from, double to) {
  const double period = expresser.tick_period();
  auto k = static_cast<std::int64_t>(std::floor(from / period + 1e-9)) + 1;
  for (double t = static_cast<double>(k) * period; t <= to + 1e-9; t = static_cast<double>(++k) * period) {
    expresser.tick(t);
  }
}

}  // namespace lami
