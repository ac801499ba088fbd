#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/chat.hpp"

namespace lami {

// One completion inside a round: the assistant message, one result text per
// tool call (in message order) and the ids in the order they were dispatched.
struct RoundStep {
  ChatMessage assistant;
  std::vector<std::string> results;
  std::vector<std::string> dispatch_order;

  friend bool operator==(const RoundStep&, const RoundStep&) = default;
};

struct QueryRound {
  std::string trigger_event;
  std::vector<std::string> scene_edits;  // operator edits applied before the trigger
  std::vector<RoundStep> steps;
  std::optional<std::string> summary;
  bool stopped = false;
  bool failed = false;
  std::string failure;

  std::size_t completions() const { return steps.size(); }

  friend bool operator==(const QueryRound&, const QueryRound&) = default;
};

struct Transcript {
  std::vector<QueryRound> rounds;  // append-only
  std::optional<std::int64_t> backend_seed;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

nlohmann::ordered_json to_json(const QueryRound& round);
QueryRound round_from_json(const nlohmann::ordered_json& node);
nlohmann::ordered_json to_json(const Transcript& transcript);
Transcript transcript_from_json(const nlohmann::ordered_json& node);

}  // namespace lami
