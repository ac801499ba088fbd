#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/chat.hpp"
#include "lami/planner.hpp"

namespace lami {

enum class ThoughtIcon { observe, reason, act, speak, express, error, summary };

std::string_view to_string(ThoughtIcon icon);
std::optional<ThoughtIcon> thought_icon_from_string(std::string_view text);

struct ThoughtLine {
  double timestamp = 0.0;
  ThoughtIcon icon = ThoughtIcon::observe;
  std::string text;
  std::size_t round = 0;

  friend bool operator==(const ThoughtLine&, const ThoughtLine&) = default;
};

inline constexpr std::string_view kRoundFailedPrefix = "Round failed: ";
inline constexpr std::string_view kNoSummary = "No summary provided.";

// Human-readable line for one dispatched call. Calls whose outcome has
// status error get the error icon and carry the error text.
ThoughtLine translate(const ToolCall& call, const std::string& result, CallStatus status = CallStatus::ok);

nlohmann::ordered_json to_json(const ThoughtLine& line);
ThoughtLine thought_line_from_json(const nlohmann::ordered_json& node);

// Append-only feed. Single writer; the orchestrator owns it.
class ThoughtLog {
 public:
  const ThoughtLine& add(const ToolCall& call, const std::string& result, CallStatus status, std::size_t round,
                         double timestamp);
  const ThoughtLine& record_summary(std::size_t round, const std::optional<std::string>& summary, bool failed,
                                   const std::string& failure, double timestamp);

  const std::vector<ThoughtLine>& lines() const { return lines_; }
  std::vector<ThoughtLine> round_lines(std::size_t round) const;

  // One JSON object per line.
  std::string to_jsonl() const;

 private:
  std::vector<ThoughtLine> lines_;
};

}  // namespace lami
