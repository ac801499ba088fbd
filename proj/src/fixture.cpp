#include "lami/fixture.hpp"

#include <fstream>

#include "lami/error.hpp"

namespace lami {

using json = nlohmann::ordered_json;

namespace {

json step_to_json(const FixtureStep& step) {
  json node;
  node["content"] = step.assistant.content ? json(*step.assistant.content) : json(nullptr);
  if (!step.assistant.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& call : step.assistant.tool_calls) {
      calls.push_back({{"id", call.id}, {"name", call.function_name}, {"arguments", call.arguments}});
    }
    node["tool_calls"] = std::move(calls);
  }
  if (step.expected_results) node["expected_results"] = *step.expected_results;
  if (step.expected_dispatch_order) node["expected_dispatch_order"] = *step.expected_dispatch_order;
  return node;
}

FixtureStep step_from_json(const json& node, const std::string& at) {
  if (!node.is_object()) throw ConfigError(at, "expected an object");
  FixtureStep step;
  step.assistant.role = Role::assistant;
  if (node.contains("content") && node.at("content").is_string()) {
    step.assistant.content = node.at("content").get<std::string>();
  }
  if (node.contains("tool_calls")) {
    const auto& calls = node.at("tool_calls");
    if (!calls.is_array()) throw ConfigError(at + ".tool_calls", "expected a list");
    for (std::size_t i = 0; i < calls.size(); ++i) {
      const std::string call_at = at + ".tool_calls[" + std::to_string(i) + "]";
      const auto& c = calls[i];
      if (!c.is_object() || !c.contains("name") || !c.at("name").is_string()) {
        throw ConfigError(call_at + ".name", "missing function name");
      }
      ToolCall call;
      call.id = c.value("id", "call_" + std::to_string(i));
      call.function_name = c.at("name").get<std::string>();
      const json args = c.value("arguments", json("{}"));
      call.arguments = args.is_string() ? args.get<std::string>() : args.dump();
      step.assistant.tool_calls.push_back(std::move(call));
    }
  }
  if (!step.assistant.content && step.assistant.tool_calls.empty()) {
    throw ConfigError(at, "step needs content or tool_calls");
  }
  if (node.contains("expected_results")) {
    step.expected_results = node.at("expected_results").get<std::vector<std::string>>();
    if (step.expected_results->size() != step.assistant.tool_calls.size()) {
      throw ConfigError(at + ".expected_results", "needs one entry per tool call");
    }
  }
  if (node.contains("expected_dispatch_order")) {
    step.expected_dispatch_order = node.at("expected_dispatch_order").get<std::vector<std::string>>();
  }
  return step;
}

}  // namespace

std::size_t Fixture::completions() const {
  std::size_t n = 0;
  for (const auto& round : rounds) n += round.steps.size();
  return n;
}

json to_json(const Fixture& fixture) {
  json node = {{"v", kFixtureVersion}};
  node["scenario"] = fixture.scenario ? json(*fixture.scenario) : json(nullptr);
  node["guidance"] = fixture.guidance ? json(*fixture.guidance) : json(nullptr);
  node["seed"] = fixture.seed ? json(*fixture.seed) : json(nullptr);
  json rounds = json::array();
  for (const auto& round : fixture.rounds) {
    json steps = json::array();
    for (const auto& step : round.steps) steps.push_back(step_to_json(step));
    json r = {{"trigger", round.trigger}, {"scene_edits", round.scene_edits}, {"steps", std::move(steps)}};
    r["summary"] = round.summary ? json(*round.summary) : json(nullptr);
    rounds.push_back(std::move(r));
  }
  node["rounds"] = std::move(rounds);
  return node;
}

Fixture fixture_from_json(const json& node) {
  if (!node.is_object()) throw ConfigError("", "fixture must be an object");
  if (node.value("v", kFixtureVersion) != kFixtureVersion) {
    throw ConfigError("v", "unsupported fixture version");
  }
  Fixture fixture;
  if (node.contains("scenario") && node.at("scenario").is_string()) {
    fixture.scenario = node.at("scenario").get<std::string>();
  }
  if (node.contains("guidance") && node.at("guidance").is_string()) {
    fixture.guidance = node.at("guidance").get<std::string>();
  }
  if (node.contains("seed") && node.at("seed").is_number_integer()) {
    fixture.seed = node.at("seed").get<std::int64_t>();
  }
  if (!node.contains("rounds")) return fixture;
  const auto& rounds = node.at("rounds");
  if (!rounds.is_array()) throw ConfigError("rounds", "expected a list");
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const std::string at = "rounds[" + std::to_string(r) + "]";
    const auto& rn = rounds[r];
    if (!rn.contains("trigger") || !rn.at("trigger").is_string()) throw ConfigError(at + ".trigger", "missing");
    FixtureRound round;
    round.trigger = rn.at("trigger").get<std::string>();
    round.scene_edits = rn.value("scene_edits", std::vector<std::string>{});
    const auto steps = rn.value("steps", json::array());
    for (std::size_t s = 0; s < steps.size(); ++s) {
      round.steps.push_back(step_from_json(steps[s], at + ".steps[" + std::to_string(s) + "]"));
    }
    if (rn.contains("summary") && rn.at("summary").is_string()) round.summary = rn.at("summary").get<std::string>();
    fixture.rounds.push_back(std::move(round));
  }
  return fixture;
}

Fixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open fixture");
  try {
    return fixture_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError(path, e.what());
  }
}

void save_fixture(const Fixture& fixture, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path, "cannot write fixture");
  out << to_json(fixture).dump(2) << "\n";
}

Fixture record_session(const Transcript& transcript) {
  Fixture fixture;
  fixture.seed = transcript.backend_seed;
  for (const auto& round : transcript.rounds) {
    FixtureRound fr;
    fr.trigger = round.trigger_event;
    fr.scene_edits = round.scene_edits;
    for (const auto& step : round.steps) {
      FixtureStep fs;
      fs.assistant = step.assistant;
      if (!step.assistant.tool_calls.empty()) {
        fs.expected_results = step.results;
        fs.expected_dispatch_order = step.dispatch_order;
      }
      fr.steps.push_back(std::move(fs));
    }
    fr.summary = round.summary;
    fixture.rounds.push_back(std::move(fr));
  }
  return fixture;
}

}  // namespace lami
