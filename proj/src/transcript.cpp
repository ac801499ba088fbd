#include "lami/transcript.hpp"

namespace lami {

using json = nlohmann::ordered_json;

json to_json(const QueryRound& round) {
  json steps = json::array();
  for (const auto& step : round.steps) {
    steps.push_back({{"assistant", to_wire(step.assistant)},
                     {"results", step.results},
                     {"dispatch_order", step.dispatch_order}});
  }
  json node = {{"trigger", round.trigger_event},
               {"scene_edits", round.scene_edits},
               {"steps", std::move(steps)},
               {"stopped", round.stopped},
               {"failed", round.failed}};
  node["summary"] = round.summary ? json(*round.summary) : json(nullptr);
  if (round.failed) node["failure"] = round.failure;
  return node;
}

QueryRound round_from_json(const json& node) {
  QueryRound round;
  round.trigger_event = node.at("trigger").get<std::string>();
  round.scene_edits = node.value("scene_edits", std::vector<std::string>{});
  for (const auto& step : node.at("steps")) {
    RoundStep s;
    s.assistant = message_from_wire(step.at("assistant"));
    s.results = step.at("results").get<std::vector<std::string>>();
    s.dispatch_order = step.value("dispatch_order", std::vector<std::string>{});
    round.steps.push_back(std::move(s));
  }
  if (node.contains("summary") && node.at("summary").is_string()) {
    round.summary = node.at("summary").get<std::string>();
  }
  round.stopped = node.value("stopped", false);
  round.failed = node.value("failed", false);
  round.failure = node.value("failure", "");
  return round;
}

json to_json(const Transcript& transcript) {
  json rounds = json::array();
  for (const auto& round : transcript.rounds) rounds.push_back(to_json(round));
  json node = {{"v", 1}};
  node["backend_seed"] = transcript.backend_seed ? json(*transcript.backend_seed) : json(nullptr);
  node["rounds"] = std::move(rounds);
  return node;
}

Transcript transcript_from_json(const json& node) {
  Transcript transcript;
  if (node.contains("backend_seed") && node.at("backend_seed").is_number_integer()) {
    transcript.backend_seed = node.at("backend_seed").get<std::int64_t>();
  }
  for (const auto& round : node.at("rounds")) transcript.rounds.push_back(round_from_json(round));
  return transcript;
}

}  // namespace lami
