// lami: run, replay and validate tabletop assistance sessions.
//
// Exit codes: 0 success, 1 divergence or validation failure, 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "lami/session.hpp"

namespace fs = std::filesystem;
using namespace lami;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string default_clips() { return (fs::path(LAMI_ASSET_DIR) / "clips").string(); }

std::string timestamped_log_dir() {
  const std::time_t now = std::time(nullptr);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y%m%d-%H%M%S", std::localtime(&now));
  return (fs::path("logs") / buffer).string();
}

std::optional<GranularityTier> parse_tier(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "single") return GranularityTier::single;
  if (text == "composite") return GranularityTier::composite;
  if (text == "aggregate") return GranularityTier::aggregate;
  throw ConfigError("--tier", "expected single, composite or aggregate");
}

// Validators for `lami validate`. Each returns the violations it found.
std::vector<std::string> validate_clip_dir(const fs::path& dir) {
  std::vector<std::string> out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ClipCatalog catalog;
  for (const auto& file : files) {
    try {
      catalog.author_clip(load_clip(file.string()));
    } catch (const ConfigError& e) {
      out.push_back(e.what());
    }
  }
  try {
    catalog.validate();
  } catch (const ConfigError& e) {
    out.push_back(dir.string() + ": " + e.what());
  }
  return out;
}

std::vector<std::string> validate_file(const fs::path& path, const std::string& clips_dir) {
  nlohmann::ordered_json doc;
  {
    std::ifstream in(path);
    if (!in) return {path.string() + ": cannot open"};
    try {
      doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::ordered_json::parse_error& e) {
      return {path.string() + ": parse error: " + e.what()};
    }
  }
  try {
    if (doc.is_object() && doc.contains("keyframes")) {
      validate_clip(clip_from_json(doc));
    } else if (doc.is_object() && (doc.contains("objects") || doc.contains("persons"))) {
      scene_from_json(nlohmann::json::parse(doc.dump())).validate();
    } else if (doc.is_object() && doc.contains("rounds")) {
      const Fixture fixture = fixture_from_json(doc);
      if (fixture.scenario) {
        const auto scenario = fs::path(*fixture.scenario).is_absolute() ? fs::path(*fixture.scenario)
                                                                          : path.parent_path() / *fixture.scenario;
        if (!fs::exists(scenario)) return {path.string() + ": scenario " + scenario.string() + " does not exist"};
      }
    } else {
      const GuidanceConfig guidance = guidance_from_json(doc);
      Scene scene;
      ClipCatalog catalog = load_clip_catalog(clips_dir);
      Registry registry = register_builtin_functions({&scene, nullptr, &catalog, {}});
      std::vector<std::string> out;
      for (const auto& v : guidance_violations(guidance, registry)) out.push_back(path.string() + ": " + v);
      return out;
    }
  } catch (const ConfigError& e) {
    return {path.string() + ": " + e.what()};
  } catch (const Error& e) {
    return {path.string() + ": " + e.what()};
  } catch (const nlohmann::json::exception& e) {
    return {path.string() + ": " + e.what()};
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabletop assistance sessions: run, replay and validate."};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a session driven by operator commands on stdin");
  SessionConfig config;
  std::string backend_kind = "scripted";
  std::string tier;
  std::string script;
  std::string log_dir;
  std::string record;
  bool no_logs = false;
  bool virtual_time = false;
  bool drive = false;
  std::uint16_t port = 0;
  config.clips_dir = default_clips();
  run->add_option("--scenario", config.scenario_path, "Scenario file");
  run->add_option("--guidance", config.guidance_path, "Guidance file (defaults built in)");
  run->add_option("--clips", config.clips_dir, "Clip directory")->capture_default_str();
  run->add_option("--backend", backend_kind, "scripted or remote")->check(CLI::IsMember({"scripted", "remote"}));
  run->add_option("--fixture", config.backend.fixture_path, "Fixture for the scripted backend");
  run->add_option("--endpoint", config.backend.endpoint, "Chat-completions base URL for the remote backend");
  run->add_option("--model", config.backend.model, "Model id")->capture_default_str();
  run->add_option("--seed", config.backend.seed, "Backend seed");
  run->add_option("--latency", config.backend.latency_simulation, "Seconds added to every backend response");
  run->add_option("--tier", tier, "Granularity tier: single, composite or aggregate");
  run->add_option("--port", port, "Serve the UI bridge on this localhost port");
  run->add_option("--log-dir", log_dir, "Log directory (default logs/<timestamp>)");
  run->add_flag("--no-logs", no_logs, "Do not write logs");
  run->add_option("--script", script, "Read operator commands from this file instead of stdin");
  run->add_option("--record", record, "Write the session as a fixture to this file");
  run->add_flag("--virtual-time", virtual_time, "Use a virtual clock (deterministic, no waiting)");
  run->add_flag("--drive", drive, "Play the scripted fixture's triggers and scene edits, then read commands");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a fixture and compare every result string");
  std::string fixture_path;
  ReplayOptions replay_options;
  replay_options.clips_dir = default_clips();
  replay->add_option("fixture", fixture_path, "Fixture file")->required();
  replay->add_option("--clips", replay_options.clips_dir, "Clip directory")->capture_default_str();
  replay->add_option("--scenario", replay_options.scenario_override, "Override the fixture's scenario");
  replay->add_option("--guidance", replay_options.guidance_override, "Override the fixture's guidance");
  replay->add_option("--log-dir", replay_options.log_dir, "Write session logs here");

  // validate
  auto* validate = app.add_subcommand("validate", "Validate scenarios, clips, guidance and fixtures");
  std::vector<std::string> paths;
  std::string validate_clips = default_clips();
  validate->add_option("paths", paths, "Files or clip directories")->required();
  validate->add_option("--clips", validate_clips, "Clip catalog used to check guidance files")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      config.backend.kind = backend_kind == "remote" ? BackendKind::remote : BackendKind::scripted;
      config.granularity_tier = parse_tier(tier);
      if (port != 0) config.bridge_port = port;
      std::optional<Fixture> fixture;
      if (config.backend.kind == BackendKind::scripted && !config.backend.fixture_path.empty()) {
        fixture = load_fixture(config.backend.fixture_path);
        const fs::path dir = fs::path(config.backend.fixture_path).parent_path();
        if (config.scenario_path.empty() && fixture->scenario) config.scenario_path = (dir / *fixture->scenario).string();
        if (config.guidance_path.empty() && fixture->guidance) config.guidance_path = (dir / *fixture->guidance).string();
      }
      if (config.scenario_path.empty()) throw ConfigError("--scenario", "a scenario file is required");
      config.backend.validate();
      if (!no_logs) config.log_dir = log_dir.empty() ? timestamped_log_dir() : log_dir;

      RealClock real_clock;
      VirtualClock virtual_clock;
      Clock& clock = virtual_time ? static_cast<Clock&>(virtual_clock) : static_cast<Clock&>(real_clock);
      Session session(config, clock, nullptr, &std::cout);
      if (session.bridge()) std::cout << "bridge listening on 127.0.0.1:" << session.bridge()->port() << std::endl;

      if (drive && fixture) {
        for (const auto& round : fixture->rounds) {
          for (const auto& edit : round.scene_edits) session.apply_edit(parse_operator_line(edit));
          std::optional<std::string> speaker;
          if (auto space = round.trigger.find(' '); space != std::string::npos) speaker = round.trigger.substr(0, space);
          session.run_trigger(round.trigger, speaker);
        }
      }

      std::thread reader([&] {
        std::ifstream file;
        std::istream* in = &std::cin;
        if (!script.empty()) {
          file.open(script);
          if (!file) {
            std::cerr << "error: cannot open script " << script << std::endl;
          } else {
            in = &file;
          }
        }
        std::string line;
        while (std::getline(*in, line)) session.post_line(line);
        session.close_input();
      });
      session.run();
      if (!drive || !fixture) {
        // Let expressions that are still playing finish.
        if (virtual_time) session.settle(1.0);
        else std::this_thread::sleep_for(std::chrono::milliseconds(300));
      }
      session.shutdown();
      reader.detach();
      if (!record.empty()) save_fixture(session.recorded_fixture(), record);
      for (const auto& round : session.transcript().rounds) {
        if (round.failed) {
          std::cerr << "round failed: " << round.failure << std::endl;
          std::cout.flush();
          std::_Exit(kExitFailure);
        }
      }
      std::cout.flush();
      // The reader thread may still block on stdin; exit without joining it.
      std::_Exit(kExitOk);
    }

    if (*replay) {
      const ReplayReport report = replay_fixture(fixture_path, replay_options);
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << std::endl;
      std::cout << report.summary() << std::endl;
      if (!report.ok()) {
        std::cout << "first diff: " << report.diffs.front() << std::endl;
        return kExitFailure;
      }
      return kExitOk;
    }

    if (*validate) {
      std::vector<std::string> violations;
      for (const auto& p : paths) {
        std::vector<std::string> found;
        if (fs::is_directory(p)) {
          found = validate_clip_dir(p);
        } else if (!fs::exists(p)) {
          found = {p + ": does not exist"};
        } else {
          found = validate_file(p, validate_clips);
        }
        violations.insert(violations.end(), found.begin(), found.end());
      }
      for (const auto& v : violations) std::cout << v << std::endl;
      std::cout << paths.size() << " path(s) checked, " << violations.size() << " violation(s)" << std::endl;
      return violations.empty() ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitUsage;
  }
  return kExitOk;
}
