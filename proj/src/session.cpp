#include "lami/session.hpp"

#include <filesystem>
#include <sstream>

namespace lami {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_words(const std::string& line, std::size_t max_fields, std::string* rest) {
  std::istringstream in(line);
  std::vector<std::string> words;
  std::string word;
  while (words.size() < max_fields && in >> word) words.push_back(word);
  std::string tail;
  std::getline(in, tail);
  const auto start = tail.find_first_not_of(" \t");
  *rest = start == std::string::npos ? "" : tail.substr(start);
  while (!rest->empty() && (rest->back() == '\r' || rest->back() == ' ')) rest->pop_back();
  return words;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw CommandError(what + ": '" + text + "' is not a number");
  }
}

std::optional<std::string> none_or(const std::string& word) {
  if (word == "none") return std::nullopt;
  return word;
}

std::string require_field(const nlohmann::json& data, const char* key) {
  if (!data.contains(key) || !data.at(key).is_string() || data.at(key).get<std::string>().empty()) {
    throw CommandError(std::string("missing field '") + key + "'");
  }
  return data.at(key).get<std::string>();
}

std::optional<std::string> optional_field(const nlohmann::json& data, const char* key) {
  if (!data.contains(key) || data.at(key).is_null()) return std::nullopt;
  if (!data.at(key).is_string()) throw CommandError(std::string("field '") + key + "' must be a string or null");
  return data.at(key).get<std::string>();
}

// Sender of a rendered speech event or actor of an activity event, used as
// the listening gaze target.
std::optional<std::string> trigger_subject(const Scene& scene, const std::string& trigger) {
  const auto space = trigger.find(' ');
  if (space == std::string::npos) return std::nullopt;
  std::string first = trigger.substr(0, space);
  if (scene.find_person(first)) return first;
  return std::nullopt;
}

}  // namespace

OperatorCommand parse_operator_line(const std::string& line) {
  std::string rest;
  const auto head = split_words(line, 1, &rest);
  if (head.empty()) throw CommandError("empty command");
  const std::string& verb = head[0];
  std::string tail;
  if (verb == "say") {
    const auto w = split_words(rest, 2, &tail);
    if (w.size() < 2 || tail.empty()) throw CommandError("usage: say <sender> <receiver> <utterance...>");
    return SayCommand{w[0], w[1], tail};
  }
  if (verb == "busy") {
    const auto w = split_words(rest, 1, &tail);
    if (w.empty() || tail.empty()) throw CommandError("usage: busy <person> <reason...>");
    return BusyCommand{w[0], tail};
  }
  if (verb == "idle") {
    const auto w = split_words(rest, 2, &tail);
    if (w.size() != 1 || !tail.empty()) throw CommandError("usage: idle <person>");
    return IdleCommand{w[0]};
  }
  if (verb == "move") {
    const auto w = split_words(rest, 5, &tail);
    if (w.size() != 4 || !tail.empty()) throw CommandError("usage: move <object> <x> <y> <z>");
    return MoveCommand{w[0], {parse_number(w[1], "x"), parse_number(w[2], "y"), parse_number(w[3], "z")}};
  }
  if (verb == "tilt") {
    const auto w = split_words(rest, 3, &tail);
    if (w.size() != 2 || !tail.empty()) throw CommandError("usage: tilt <object> <target|none>");
    return TiltCommand{w[0], none_or(w[1])};
  }
  if (verb == "hold") {
    const auto w = split_words(rest, 3, &tail);
    if (w.size() != 2 || !tail.empty()) throw CommandError("usage: hold <person> <object|none>");
    return HoldCommand{w[0], none_or(w[1])};
  }
  if (verb == "quit") {
    if (!rest.empty()) throw CommandError("usage: quit");
    return QuitCommand{};
  }
  throw CommandError("unknown command '" + verb + "'");
}

std::string to_line(const OperatorCommand& command) {
  struct Visitor {
    std::string operator()(const SayCommand& c) const { return "say " + c.sender + " " + c.receiver + " " + c.utterance; }
    std::string operator()(const BusyCommand& c) const { return "busy " + c.person + " " + c.reason; }
    std::string operator()(const IdleCommand& c) const { return "idle " + c.person; }
    std::string operator()(const MoveCommand& c) const {
      std::ostringstream out;
      out.precision(17);
      out << "move " << c.object << " " << c.position.x << " " << c.position.y << " " << c.position.z;
      return out.str();
    }
    std::string operator()(const TiltCommand& c) const { return "tilt " + c.object + " " + c.target.value_or("none"); }
    std::string operator()(const HoldCommand& c) const { return "hold " + c.person + " " + c.object.value_or("none"); }
    std::string operator()(const QuitCommand&) const { return "quit"; }
  };
  return std::visit(Visitor{}, command);
}

OperatorCommand command_from_bridge(const BridgeMessage& message) {
  const auto& d = message.data;
  if (message.kind == BridgeKind::event_injection) {
    return SayCommand{require_field(d, "sender"), require_field(d, "receiver"), require_field(d, "utterance")};
  }
  if (message.kind != BridgeKind::scene_edit) {
    throw CommandError("clients may only send event_injection and scene_edit messages");
  }
  const std::string op = require_field(d, "op");
  if (op == "move") {
    if (!d.contains("position") || !d.at("position").is_array() || d.at("position").size() != 3) {
      throw CommandError("move needs position [x, y, z]");
    }
    const auto& p = d.at("position");
    for (const auto& v : p) {
      if (!v.is_number()) throw CommandError("position entries must be numbers");
    }
    return MoveCommand{require_field(d, "object"), {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}};
  }
  if (op == "busy") return BusyCommand{require_field(d, "person"), require_field(d, "reason")};
  if (op == "idle") return IdleCommand{require_field(d, "person")};
  if (op == "tilt") return TiltCommand{require_field(d, "object"), optional_field(d, "target")};
  if (op == "hold") return HoldCommand{require_field(d, "person"), optional_field(d, "object")};
  throw CommandError("unknown scene_edit op '" + op + "'");
}

bool is_scene_edit(const OperatorCommand& command) {
  return !std::holds_alternative<SayCommand>(command) && !std::holds_alternative<QuitCommand>(command);
}

void apply_scene_edit(Scene& scene, const OperatorCommand& command) {
  if (const auto* c = std::get_if<BusyCommand>(&command)) {
    scene.set_activity(c->person, {true, c->reason});
  } else if (const auto* c = std::get_if<IdleCommand>(&command)) {
    scene.set_activity(c->person, {false, std::nullopt});
  } else if (const auto* c = std::get_if<MoveCommand>(&command)) {
    auto& object = scene.object(c->object);
    if (object.held_by) scene.set_holder(c->object, std::nullopt);
    auto& moved = scene.object(c->object);
    moved.set_position(c->position);
    moved.resting_on.reset();
  } else if (const auto* c = std::get_if<TiltCommand>(&command)) {
    auto& object = scene.object(c->object);
    if (c->target) {
      if (*c->target == c->object) throw CommandError("an object cannot be tilted toward itself");
      scene.object(*c->target);  // must exist
    }
    object.tilted_toward = c->target;
  } else if (const auto* c = std::get_if<HoldCommand>(&command)) {
    const auto& person = scene.person(c->person);
    if (c->object) {
      scene.set_holder(*c->object, c->person);
    } else {
      for (const auto& held : std::vector<std::string>(person.holding)) scene.set_holder(held, std::nullopt);
    }
  } else {
    throw CommandError("not a scene edit");
  }
}

Session::Session(SessionConfig config, Clock& clock, std::unique_ptr<ChatBackend> backend, std::ostream* console)
    : config_(std::move(config)), clock_(clock), console_(console) {
  virtual_time_ = dynamic_cast<VirtualClock*>(&clock_) != nullptr;

  if (!fs::exists(config_.scenario_path)) throw ConfigError(config_.scenario_path, "scenario file does not exist");
  scene_ = load_scene(config_.scenario_path);

  ClipCatalog catalog = load_clip_catalog(config_.clips_dir);
  try {
    catalog.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(config_.clips_dir + ":" + e.path(), e.message());
  }

  if (!config_.guidance_path.empty()) guidance_ = load_guidance(config_.guidance_path);
  if (config_.granularity_tier) guidance_.granularity_tier = *config_.granularity_tier;

  expresser_ = std::make_unique<Expresser>(std::move(catalog), clock_, config_.expresser);

  BuiltinContext context;
  context.scene = &scene_;
  context.expresser = expresser_.get();
  context.catalog = &expresser_->catalog();
  context.on_speak = [this](const std::string& person, const std::string& text) {
    spoken_.push_back(person + ": " + text);
    say("the_robot says to " + person + ": " + text);
  };
  registry_ = register_builtin_functions(context);
  const std::string guidance_origin = config_.guidance_path.empty() ? "guidance" : config_.guidance_path;
  try {
    apply_guidance(registry_, guidance_);
    system_message_ = build_system_message(guidance_, expresser_->catalog(), registry_);
  } catch (const ConfigError& e) {
    throw ConfigError(guidance_origin + ":" + e.path(), e.message());
  }

  backend_ = backend ? std::move(backend) : make_backend(config_.backend, clock_);
  planner_ = std::make_unique<Planner>(guidance_, registry_, *backend_, system_message_);
  planner_->set_backend_seed(config_.backend.seed);

  if (!config_.log_dir.empty()) {
    fs::create_directories(config_.log_dir);
    const fs::path dir(config_.log_dir);
    transcript_log_.open(dir / "transcript.jsonl");
    thought_log_.open(dir / "thoughts.jsonl");
    actuator_csv_.open(dir / "actuators.csv");
    if (!transcript_log_ || !thought_log_ || !actuator_csv_) {
      throw ConfigError(config_.log_dir, "cannot write log files");
    }
    expresser_->set_csv_sink(&actuator_csv_);
  }

  if (auto* vc = dynamic_cast<VirtualClock*>(&clock_)) {
    vc->set_listener([this](double from, double to) { tick_through(*expresser_, from, to); });
  } else {
    ticker_ = std::make_unique<Ticker>(*expresser_, clock_);
    ticker_->start();
  }

  if (config_.bridge_port) {
    bridge_ = std::make_unique<BridgeServer>(
        *config_.bridge_port,
        [this](const BridgeMessage& message) {
          try {
            post(command_from_bridge(message));
          } catch (const CommandError& e) {
            say(std::string("rejected bridge message: ") + e.what());
          }
        },
        [this] {
          std::lock_guard lock(queue_mutex_);
          queue_.push_back(std::nullopt);
          queue_cv_.notify_one();
        });
    bridge_frames_ = expresser_->subscribe();
    pumping_ = true;
    frame_pump_ = std::thread([this] {
      while (pumping_.load()) {
        while (auto frame = bridge_frames_->try_pop()) bridge_->broadcast(frame_message(*frame));
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
    });
  }
}

Session::~Session() { shutdown(); }

void Session::shutdown() {
  if (shut_down_) return;
  shut_down_ = true;
  if (ticker_) ticker_->stop();
  if (auto* vc = dynamic_cast<VirtualClock*>(&clock_)) vc->set_listener({});
  if (pumping_.exchange(false) && frame_pump_.joinable()) frame_pump_.join();
  if (bridge_) bridge_->stop();
  if (bridge_frames_) expresser_->unsubscribe(bridge_frames_);
  expresser_->set_csv_sink(nullptr);
  if (!config_.log_dir.empty()) {
    const fs::path dir(config_.log_dir);
    std::ofstream scheduler(dir / "scheduler.jsonl");
    for (const auto& e : expresser_->log()) {
      nlohmann::ordered_json line = {{"seq", e.seq}, {"time", e.time}, {"timeline", e.timeline}};
      static constexpr std::string_view kinds[] = {"command", "preempted", "suppressed", "deferred",
                                                   "cancelled", "ended", "dropped"};
      line["kind"] = kinds[static_cast<int>(e.kind)];
      line["origin"] = to_string(e.origin);
      if (e.command) {
        static constexpr std::string_view commands[] = {"gaze", "head", "ears_lid"};
        line["command"] = commands[static_cast<int>(*e.command)];
      }
      line["name"] = e.name;
      scheduler << line.dump() << "\n";
    }
    save_fixture(recorded_fixture(), (dir / "recorded_fixture.json").string());
    transcript_log_.flush();
    thought_log_.flush();
    actuator_csv_.flush();
  }
}

void Session::say(const std::string& text) {
  if (console_) *console_ << text << std::endl;
}

void Session::broadcast(const BridgeMessage& message) {
  if (bridge_) bridge_->broadcast(message);
}

void Session::broadcast_status() {
  {
    std::lock_guard lock(queue_mutex_);
    status_.queued = queue_.size();
  }
  broadcast(status_message(status_));
}

void Session::post(OperatorCommand command) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(command));
    status_.queued = queue_.size();
  }
  queue_cv_.notify_one();
}

void Session::post_line(const std::string& line) {
  if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') return;
  try {
    post(parse_operator_line(line));
  } catch (const CommandError& e) {
    say(std::string("error: ") + e.what());
  }
}

void Session::close_input() {
  {
    std::lock_guard lock(queue_mutex_);
    input_closed_ = true;
  }
  queue_cv_.notify_one();
}

void Session::run() {
  broadcast(snapshot_message(scene_, status_));
  for (;;) {
    std::optional<OperatorCommand> item;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return !queue_.empty() || input_closed_; });
      if (queue_.empty()) break;
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    if (!item) {
      broadcast(snapshot_message(scene_, status_));
      continue;
    }
    if (std::holds_alternative<QuitCommand>(*item)) break;
    try {
      handle(*item);
    } catch (const Error& e) {
      say(std::string("error: ") + e.what());
    }
  }
}

void Session::apply_edit(const OperatorCommand& command) {
  apply_scene_edit(scene_, command);
  pending_edits_.push_back(to_line(command));
  broadcast(snapshot_message(scene_, status_));
}

std::optional<QueryRound> Session::handle(const OperatorCommand& command) {
  if (const auto* c = std::get_if<SayCommand>(&command)) {
    std::string trigger;
    try {
      trigger = render_speech(scene_, {c->sender, c->receiver, c->utterance});
    } catch (const PreconditionError& e) {
      throw CommandError(e.what());
    }
    return run_trigger(trigger, c->sender);
  }
  if (std::holds_alternative<QuitCommand>(command)) return std::nullopt;
  const Scene before = scene_;
  apply_edit(command);
  if (auto event = detect_pouring(before, scene_)) return run_trigger(event->text, event->actor);
  return std::nullopt;
}

PlannerHooks Session::make_hooks() {
  PlannerHooks hooks;
  hooks.on_trigger = [this](const std::string& trigger) { say("> " + trigger); };
  hooks.on_request_begin = [this] {
    expresser_->reactive_trigger(ReactiveKind::thinking, scene_);
    status_.phase = RoundPhase::pending;
    broadcast_status();
  };
  hooks.on_request_end = [this] {
    expresser_->stop_thinking();
    status_.phase = RoundPhase::dispatching;
    broadcast_status();
  };
  hooks.on_dispatch_end = [this](const ToolCall& call, const CallOutcome& outcome, std::optional<FunctionKind> kind) {
    const auto& line = thoughts_.add(call, outcome.text, outcome.status, current_round_, clock_.now());
    if (thought_log_.is_open()) thought_log_ << to_json(line).dump() << "\n";
    broadcast(thought_message(line));
    say("  [" + std::string(to_string(line.icon)) + "] " + line.text);
    if (kind != FunctionKind::express && kind != FunctionKind::control) {
      expresser_->reactive_trigger(outcome.status == CallStatus::ok ? ReactiveKind::success : ReactiveKind::failure,
                                   scene_);
    }
  };
  hooks.on_reasoning = [this](const std::string& text) { say("  " + text); };
  hooks.on_round_end = [this](const QueryRound& round) {
    expresser_->reactive_trigger(ReactiveKind::reset, scene_);
    const auto& line =
        thoughts_.record_summary(current_round_, round.summary, round.failed, round.failure, clock_.now());
    if (thought_log_.is_open()) thought_log_ << to_json(line).dump() << "\n";
    if (transcript_log_.is_open()) transcript_log_ << to_json(round).dump() << "\n";
    broadcast(thought_message(line));
    say("  [summary] " + line.text);
  };
  return hooks;
}

QueryRound Session::run_trigger(const std::string& trigger, const std::optional<std::string>& speaker) {
  current_round_ = planner_->transcript().rounds.size();
  status_.round = current_round_;
  status_.phase = RoundPhase::pending;
  broadcast_status();

  std::optional<std::string> gaze = speaker;
  if (gaze && !scene_.has_entity(*gaze)) gaze.reset();
  expresser_->reactive_trigger(ReactiveKind::listening, scene_, gaze);

  QueryRound round = planner_->run_round(trigger, make_hooks(), std::move(pending_edits_));
  pending_edits_.clear();
  if (virtual_time_) settle(config_.settle_after_round);

  status_.phase = RoundPhase::idle;
  broadcast_status();
  broadcast(snapshot_message(scene_, status_));
  return round;
}

void Session::settle(double seconds) {
  if (virtual_time_) clock_.sleep_for(seconds);
}

Fixture Session::recorded_fixture() const {
  Fixture fixture = record_session(planner_->transcript());
  fixture.scenario = fs::absolute(config_.scenario_path).string();
  if (!config_.guidance_path.empty()) fixture.guidance = fs::absolute(config_.guidance_path).string();
  return fixture;
}

std::string ReplayReport::summary() const {
  return std::to_string(completions) + " completions, " + std::to_string(diffs.size()) + " diffs";
}

ReplayReport replay_fixture(const std::string& fixture_path, const ReplayOptions& options) {
  ReplayReport report;
  const Fixture fixture = load_fixture(fixture_path);
  report.completions = fixture.completions();
  if (fixture.rounds.empty()) {
    report.warnings.push_back("fixture has no rounds; nothing to replay");
    return report;
  }
  const fs::path dir = fs::path(fixture_path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (dir / p).string(); };

  SessionConfig config;
  if (!options.scenario_override.empty()) {
    config.scenario_path = options.scenario_override;
  } else if (fixture.scenario) {
    config.scenario_path = resolve(*fixture.scenario);
  } else {
    throw ConfigError(fixture_path + ":scenario", "fixture names no scenario");
  }
  if (!options.guidance_override.empty()) {
    config.guidance_path = options.guidance_override;
  } else if (fixture.guidance) {
    config.guidance_path = resolve(*fixture.guidance);
  }
  config.clips_dir = options.clips_dir;
  config.log_dir = options.log_dir;
  config.backend.kind = BackendKind::scripted;
  config.backend.fixture_path = fixture_path;
  config.backend.seed = fixture.seed;

  VirtualClock clock;
  auto scripted = std::make_unique<ScriptedBackend>(fixture, clock, 0.0);
  ScriptedBackend* oracle = scripted.get();
  Session session(config, clock, std::move(scripted));

  std::size_t step_number = 0;
  for (std::size_t r = 0; r < fixture.rounds.size() && report.diffs.empty(); ++r) {
    const auto& expected = fixture.rounds[r];
    for (const auto& edit : expected.scene_edits) session.apply_edit(parse_operator_line(edit));
    const QueryRound round = session.run_trigger(expected.trigger, trigger_subject(session.scene(), expected.trigger));
    const std::size_t steps = std::max(expected.steps.size(), round.steps.size());
    for (std::size_t i = 0; i < steps && report.diffs.empty(); ++i) {
      const std::string where = "round " + std::to_string(r + 1) + ", step " + std::to_string(step_number + i + 1);
      if (i >= round.steps.size()) {
        report.diffs.push_back(where + ": the session ended the round before this completion");
        break;
      }
      if (i >= expected.steps.size()) {
        report.diffs.push_back(where + ": the session requested a completion the fixture does not have");
        break;
      }
      const auto& want = expected.steps[i];
      const auto& got = round.steps[i];
      if (want.expected_results) {
        for (std::size_t k = 0; k < want.expected_results->size(); ++k) {
          const std::string actual = k < got.results.size() ? got.results[k] : "<missing>";
          if (actual != (*want.expected_results)[k]) {
            const auto& calls = got.assistant.tool_calls;
            const std::string name = k < calls.size() ? calls[k].function_name : "?";
            report.diffs.push_back(where + ", call " + std::to_string(k) + " (" + name + "): expected \"" +
                                   (*want.expected_results)[k] + "\", got \"" + actual + "\"");
            break;
          }
        }
      }
      if (report.diffs.empty() && want.expected_dispatch_order && *want.expected_dispatch_order != got.dispatch_order) {
        std::string got_order;
        for (const auto& id : got.dispatch_order) got_order += (got_order.empty() ? "" : ",") + id;
        report.diffs.push_back(where + ": dispatch order differs (got " + got_order + ")");
      }
    }
    if (report.diffs.empty() && round.failed) {
      report.diffs.push_back("round " + std::to_string(r + 1) + " failed: " + round.failure);
    }
    step_number += expected.steps.size();
  }
  if (report.diffs.empty() && !oracle->exhausted()) {
    report.diffs.push_back("fixture has completions the session never requested");
  }
  report.transcript = session.transcript();
  session.shutdown();
  return report;
}

}  // namespace lami
