#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lami/session.hpp"
#include "oracles.hpp"

namespace lami {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream out;
  out << in.rdbuf();
  return out.str();
}

TEST(OperatorLine, ParsesEveryCommand) {
  const auto say = std::get<SayCommand>(parse_operator_line("say Felix Daniel Can you pass me the fanta bottle?"));
  EXPECT_EQ(say.sender, "Felix");
  EXPECT_EQ(say.receiver, "Daniel");
  EXPECT_EQ(say.utterance, "Can you pass me the fanta bottle?");
  EXPECT_EQ(std::get<BusyCommand>(parse_operator_line("busy Daniel cutting a lemon")).reason, "cutting a lemon");
  EXPECT_EQ(std::get<IdleCommand>(parse_operator_line("idle Daniel")).person, "Daniel");
  const auto move = std::get<MoveCommand>(parse_operator_line("move the_iPhone 0.3 -0.3 0.76"));
  EXPECT_EQ(move.position, (Vec3{0.3, -0.3, 0.76}));
  EXPECT_FALSE(std::get<TiltCommand>(parse_operator_line("tilt the_cola_bottle none")).target.has_value());
  EXPECT_EQ(std::get<HoldCommand>(parse_operator_line("hold Felix glass_one")).object, "glass_one");
  EXPECT_TRUE(std::holds_alternative<QuitCommand>(parse_operator_line("quit")));
}

TEST(OperatorLine, LinesRoundTrip) {
  for (const char* line : {"say Felix the_robot pour me some cola", "busy Daniel cutting a lemon", "idle Daniel",
                           "move the_iPhone 0.29999999999999999 -0.29999999999999999 0.76000000000000001",
                           "tilt the_cola_bottle glass_one", "hold Felix none", "quit"}) {
    EXPECT_EQ(to_line(parse_operator_line(line)), line);
  }
}

TEST(OperatorLine, UsageErrors) {
  for (const char* line : {"", "say Felix", "say Felix Daniel", "busy Daniel", "idle", "idle Daniel now",
                           "move x 1 2", "move x 1 2 abc", "move x 1 2 nan", "tilt x", "hold Felix", "quit now",
                           "dance"}) {
    EXPECT_THROW(parse_operator_line(line), CommandError) << line;
  }
}

TEST(BridgeCommands, MapToOperatorCommands) {
  const auto say = command_from_bridge(
      {BridgeKind::event_injection, {{"sender", "Felix"}, {"receiver", "Daniel"}, {"utterance", "hi"}}});
  EXPECT_EQ(to_line(say), "say Felix Daniel hi");
  const auto move =
      command_from_bridge({BridgeKind::scene_edit, {{"op", "move"}, {"object", "a"}, {"position", {1, 2, 3}}}});
  EXPECT_EQ(std::get<MoveCommand>(move).position, (Vec3{1, 2, 3}));
  const auto hold =
      command_from_bridge({BridgeKind::scene_edit, {{"op", "hold"}, {"person", "Felix"}, {"object", nullptr}}});
  EXPECT_FALSE(std::get<HoldCommand>(hold).object.has_value());

  EXPECT_THROW(command_from_bridge({BridgeKind::actuator_frame, {}}), CommandError);
  EXPECT_THROW(command_from_bridge({BridgeKind::scene_edit, {{"op", "move"}, {"object", "a"}, {"position", {1, 2}}}}),
               CommandError);
  EXPECT_THROW(command_from_bridge({BridgeKind::event_injection, {{"sender", "Felix"}}}), CommandError);
  EXPECT_THROW(command_from_bridge({BridgeKind::scene_edit, {{"op", "teleport"}}}), CommandError);
}

TEST(SceneEdits, ApplyToTheScene) {
  Scene scene = load_scene(testing::asset("scenarios/explicit.json"));
  apply_scene_edit(scene, parse_operator_line("hold Felix none"));
  EXPECT_FALSE(scene.object("glass_one").held_by.has_value());
  apply_scene_edit(scene, parse_operator_line("move glass_one -0.5 -0.3 0.8"));
  EXPECT_EQ(scene.object("glass_one").bounds.center, (Vec3{-0.5, -0.3, 0.8}));
  apply_scene_edit(scene, parse_operator_line("hold Daniel the_cola_bottle"));
  EXPECT_EQ(scene.object("the_cola_bottle").held_by, "Daniel");
  apply_scene_edit(scene, parse_operator_line("tilt the_cola_bottle glass_two"));
  EXPECT_EQ(scene.object("the_cola_bottle").tilted_toward, "glass_two");
  apply_scene_edit(scene, parse_operator_line("busy Felix reading"));
  EXPECT_TRUE(is_busy(scene, "Felix").busy);
  EXPECT_NO_THROW(scene.validate());

  EXPECT_THROW(apply_scene_edit(scene, parse_operator_line("idle Bob")), LookupError);
  EXPECT_THROW(apply_scene_edit(scene, parse_operator_line("move the_moon 0 0 0")), LookupError);
  EXPECT_THROW(apply_scene_edit(scene, parse_operator_line("quit")), CommandError);
}

// Stops at once; used where the conversation itself does not matter.
class StopBackend final : public ChatBackend {
 public:
  ChatMessage complete(std::span<const ChatMessage> history, std::span<const FunctionSpec>) override {
    ChatMessage m;
    m.role = Role::assistant;
    if (history.back().content == kSummaryPrompt) {
      m.content = "Nothing to do.";
    } else {
      m.tool_calls = {{"call_1", "stop", "{}"}};
    }
    return m;
  }
};

SessionConfig config_for(const std::string& scenario, const std::string& fixture = "") {
  SessionConfig config;
  config.scenario_path = testing::asset("scenarios/" + scenario);
  config.clips_dir = testing::asset("clips");
  config.backend.fixture_path = fixture.empty() ? "" : testing::fixture_path(fixture);
  return config;
}

TEST(SessionHandle, PouringByAPersonTriggersARound) {
  VirtualClock clock;
  Session session(config_for("explicit.json"), clock, std::make_unique<StopBackend>());
  EXPECT_FALSE(session.handle(parse_operator_line("hold Daniel the_cola_bottle")).has_value());
  const auto round = session.handle(parse_operator_line("tilt the_cola_bottle glass_two"));
  ASSERT_TRUE(round.has_value());
  EXPECT_EQ(round->trigger_event, "Daniel is pouring the_cola_bottle into glass_two");
  EXPECT_EQ(round->scene_edits,
            (std::vector<std::string>{"hold Daniel the_cola_bottle", "tilt the_cola_bottle glass_two"}));
  EXPECT_TRUE(round->stopped);
  // Tilting the same way again is not a new event.
  EXPECT_FALSE(session.handle(parse_operator_line("tilt the_cola_bottle glass_two")).has_value());
}

TEST(SessionHandle, SpeechFromStrangersIsRejected) {
  VirtualClock clock;
  Session session(config_for("explicit.json"), clock, std::make_unique<StopBackend>());
  EXPECT_THROW(session.handle(parse_operator_line("say Bob Felix hi")), CommandError);
  EXPECT_TRUE(session.transcript().rounds.empty());
}

TEST(SessionHandle, QueuedCommandsRunInOrder) {
  VirtualClock clock;
  std::ostringstream console;
  Session session(config_for("explicit.json"), clock, std::make_unique<StopBackend>(), &console);
  session.post_line("# comment");
  session.post_line("say Felix the_robot one");
  session.post_line("bogus line");
  session.post_line("say Daniel the_robot two");
  session.post_line("quit");
  session.post_line("say Felix the_robot never");
  session.run();
  ASSERT_EQ(session.transcript().rounds.size(), 2u);
  EXPECT_EQ(session.transcript().rounds[1].trigger_event, "Daniel said to the_robot: two");
  EXPECT_NE(console.str().find("error: unknown command 'bogus'"), std::string::npos);
}

TEST(SessionConfig, MissingScenarioNamesThePath) {
  VirtualClock clock;
  SessionConfig config = config_for("nope.json");
  try {
    Session session(config, clock, std::make_unique<StopBackend>());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path(), config.scenario_path);
  }
}

TEST(SessionConfig, BadGuidanceNamesTheFile) {
  const fs::path dir = fs::temp_directory_path() / "lami_guidance_test";
  fs::create_directories(dir);
  const fs::path file = dir / "bad.json";
  std::ofstream(file) << R"({"enabled_functions": ["get_objects", "stop"]})";
  VirtualClock clock;
  SessionConfig config = config_for("explicit.json");
  config.guidance_path = file.string();
  try {
    Session session(config, clock, std::make_unique<StopBackend>());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.path().rfind(file.string(), 0), 0u) << e.path();
    EXPECT_NE(std::string(e.what()).find("robot_facial_expression"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Replay, EveryShippedFixtureReplaysWithoutDiffs) {
  for (const char* name : {"appendix_b.json", "reachable_assist.json", "reachable_observe.json", "busy_assist.json",
                           "busy_observe.json", "finding_assist.json", "finding_observe.json", "explicit_pour.json",
                           "explicit_fallback.json"}) {
    const ReplayReport report = replay_fixture(testing::fixture_path(name), {testing::asset("clips")});
    EXPECT_TRUE(report.ok()) << name << ": " << (report.ok() ? "" : report.diffs.front());
    EXPECT_EQ(report.completions, load_fixture(testing::fixture_path(name)).completions());
  }
}

TEST(Replay, AppendixSummaryLine) {
  const ReplayReport report = replay_fixture(testing::fixture_path("appendix_b.json"), {testing::asset("clips")});
  EXPECT_EQ(report.summary(), "13 completions, 0 diffs");
}

TEST(Replay, EditedExpectationIsReportedAtItsStep) {
  const fs::path dir = fs::temp_directory_path() / "lami_replay_edit";
  fs::create_directories(dir);
  auto doc = nlohmann::ordered_json::parse(std::ifstream(testing::fixture_path("appendix_b.json")));
  doc["scenario"] = (fs::path(LAMI_FIXTURE_DIR) / doc["scenario"].get<std::string>()).string();
  doc["rounds"][0]["steps"][2]["expected_results"][1] = "Daniel can see the_fanta_bottle.";
  std::ofstream(dir / "edited.json") << doc.dump(2);

  const ReplayReport report = replay_fixture((dir / "edited.json").string(), {testing::asset("clips")});
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.diffs.front(),
            "round 1, step 3, call 1 (can_person_see_object): expected \"Daniel can see the_fanta_bottle.\", got "
            "\"Daniel cannot see the_fanta_bottle, it is occluded by lego_box\"");
  fs::remove_all(dir);
}

TEST(Replay, EmptyFixtureWarns) {
  const fs::path dir = fs::temp_directory_path() / "lami_replay_empty";
  fs::create_directories(dir);
  std::ofstream(dir / "empty.json") << R"({"v":1,"rounds":[]})";
  const ReplayReport report = replay_fixture((dir / "empty.json").string(), {testing::asset("clips")});
  EXPECT_TRUE(report.ok());
  EXPECT_EQ(report.summary(), "0 completions, 0 diffs");
  ASSERT_EQ(report.warnings.size(), 1u);
  fs::remove_all(dir);
}

TEST(Replay, LogsAreWrittenAndReproducible) {
  const fs::path root = fs::temp_directory_path() / "lami_replay_logs";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    ReplayOptions options{testing::asset("clips")};
    options.log_dir = (root / run).string();
    ASSERT_TRUE(replay_fixture(testing::fixture_path("appendix_b.json"), options).ok());
  }
  for (const char* file :
       {"transcript.jsonl", "thoughts.jsonl", "actuators.csv", "scheduler.jsonl", "recorded_fixture.json"}) {
    const std::string a = read_file(root / "a" / file);
    EXPECT_FALSE(a.empty()) << file;
    EXPECT_EQ(a, read_file(root / "b" / file)) << file;
  }
  const std::string csv = read_file(root / "a" / "actuators.csv");
  EXPECT_EQ(csv.rfind("timestamp,left_ear,right_ear,lid,pan,tilt,active_clip\n", 0), 0u);
  EXPECT_NE(csv.find(",focus\n"), std::string::npos);
  fs::remove_all(root);
}

TEST(SessionLatency, ThinkingFillsTheWait) {
  const fs::path dir = fs::temp_directory_path() / "lami_latency";
  fs::remove_all(dir);
  VirtualClock clock;
  SessionConfig config = config_for("appendix_b.json", "appendix_b.json");
  config.backend.latency_simulation = 2.0;
  config.log_dir = dir.string();
  {
    Session session(config, clock);
    session.run_trigger("Felix said to Daniel: Can you pass me the fanta bottle?", "Felix");
    ASSERT_TRUE(session.transcript().rounds.at(0).stopped);
  }
  const std::string csv = read_file(dir / "actuators.csv");
  EXPECT_NE(csv.find(",thinking\n"), std::string::npos);
  EXPECT_NE(csv.find(",listen_to_person\n"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace lami
