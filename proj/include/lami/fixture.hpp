#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/chat.hpp"
#include "lami/transcript.hpp"

namespace lami {

// A scripted backend session. Each step is one assistant completion plus
// the result texts the planner is expected to produce for its tool calls,
// so a fixture doubles as a golden test.
struct FixtureStep {
  ChatMessage assistant;
  std::optional<std::vector<std::string>> expected_results;
  std::optional<std::vector<std::string>> expected_dispatch_order;

  friend bool operator==(const FixtureStep&, const FixtureStep&) = default;
};

struct FixtureRound {
  std::string trigger;
  std::vector<std::string> scene_edits;  // operator protocol lines
  std::vector<FixtureStep> steps;
  std::optional<std::string> summary;

  friend bool operator==(const FixtureRound&, const FixtureRound&) = default;
};

struct Fixture {
  std::optional<std::string> scenario;  // relative to the fixture file
  std::optional<std::string> guidance;
  std::optional<std::int64_t> seed;
  std::vector<FixtureRound> rounds;

  std::size_t completions() const;

  friend bool operator==(const Fixture&, const Fixture&) = default;
};

inline constexpr int kFixtureVersion = 1;

nlohmann::ordered_json to_json(const Fixture& fixture);
Fixture fixture_from_json(const nlohmann::ordered_json& node);
Fixture load_fixture(const std::string& path);
void save_fixture(const Fixture& fixture, const std::string& path);

// Turns a completed session into a fixture that replays to the same
// dispatches and results under the scripted backend.
Fixture record_session(const Transcript& transcript);

}  // namespace lami
