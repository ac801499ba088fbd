#include "lami/thought_log.hpp"

#include <array>

namespace lami {

namespace {

constexpr std::array<std::string_view, 7> kIconNames = {"observe", "reason", "act", "speak",
                                                        "express", "error", "summary"};

std::string arg(const nlohmann::ordered_json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args.at(key).is_string()) return "?";
  return args.at(key).get<std::string>();
}

std::string expression_text(const nlohmann::ordered_json& args) {
  std::vector<std::string> parts;
  auto optional = [&](const char* key) -> std::optional<std::string> {
    if (!args.is_object() || !args.contains(key) || !args.at(key).is_string()) return std::nullopt;
    return args.at(key).get<std::string>();
  };
  if (auto target = optional("gazed_target")) parts.push_back("looked at " + *target);
  if (auto head = optional("head_motion")) parts.push_back("moved my head (" + *head + ")");
  if (auto ears = optional("ears_lid_motion")) parts.push_back("moved my ears and lid (" + *ears + ")");
  if (parts.empty()) return "I kept a neutral face.";
  std::string out = "I ";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += i + 1 == parts.size() ? " and " : ", ";
    out += parts[i];
  }
  return out + ".";
}

}  // namespace

std::string_view to_string(ThoughtIcon icon) { return kIconNames[static_cast<std::size_t>(icon)]; }

std::optional<ThoughtIcon> thought_icon_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kIconNames.size(); ++i) {
    if (kIconNames[i] == text) return static_cast<ThoughtIcon>(i);
  }
  return std::nullopt;
}

ThoughtLine translate(const ToolCall& call, const std::string& result, CallStatus status) {
  ThoughtLine line;
  if (status == CallStatus::error) {
    line.icon = ThoughtIcon::error;
    line.text = result.empty() ? "Something went wrong calling " + call.function_name + "." : result;
    return line;
  }
  nlohmann::ordered_json args = nlohmann::ordered_json::object();
  try {
    if (!call.arguments.empty()) args = nlohmann::ordered_json::parse(call.arguments);
  } catch (const nlohmann::ordered_json::parse_error&) {
  }
  const std::string& name = call.function_name;
  if (name == "get_objects" || name == "get_persons") {
    line.icon = ThoughtIcon::observe;
    line.text = "I looked around the table: " + result;
  } else if (name == "can_person_see_object") {
    line.icon = ThoughtIcon::observe;
    line.text = "I checked whether " + arg(args, "person_name") + " can see " + arg(args, "object_name") + ": " + result;
  } else if (name == "can_person_reach_object") {
    line.icon = ThoughtIcon::observe;
    line.text =
        "I checked whether " + arg(args, "person_name") + " can reach " + arg(args, "object_name") + ": " + result;
  } else if (name == "is_person_busy_or_idle" || name == "is_person_busy") {
    line.icon = ThoughtIcon::observe;
    line.text = "I checked whether " + arg(args, "person_name") + " is busy: " + result;
  } else if (name == "check_hindering_reasons") {
    line.icon = ThoughtIcon::reason;
    line.text = "I checked what could hinder " + arg(args, "person_name") + " with " + arg(args, "object_name") +
                ": " + result;
  } else if (name == "get_environment_description") {
    line.icon = ThoughtIcon::observe;
    line.text = "I surveyed the whole scene: " + result;
  } else if (name == "speak") {
    line.icon = ThoughtIcon::speak;
    line.text = "I told " + arg(args, "person_name") + ": " + arg(args, "text");
  } else if (name == "robot_facial_expression") {
    line.icon = ThoughtIcon::express;
    line.text = expression_text(args);
  } else if (name == "stop") {
    line.icon = ThoughtIcon::act;
    line.text = "I finished the task.";
  } else {
    line.icon = ThoughtIcon::act;
    line.text = "I acted (" + name + "): " + result;
  }
  return line;
}

nlohmann::ordered_json to_json(const ThoughtLine& line) {
  return {{"timestamp", line.timestamp}, {"round", line.round}, {"icon", to_string(line.icon)}, {"text", line.text}};
}

ThoughtLine thought_line_from_json(const nlohmann::ordered_json& node) {
  ThoughtLine line;
  line.timestamp = node.at("timestamp").get<double>();
  line.round = node.at("round").get<std::size_t>();
  const auto icon = thought_icon_from_string(node.at("icon").get<std::string>());
  if (!icon) throw ConfigError("icon", "unknown thought icon");
  line.icon = *icon;
  line.text = node.at("text").get<std::string>();
  return line;
}

const ThoughtLine& ThoughtLog::add(const ToolCall& call, const std::string& result, CallStatus status,
                                   std::size_t round, double timestamp) {
  ThoughtLine line = translate(call, result, status);
  line.round = round;
  line.timestamp = timestamp;
  lines_.push_back(std::move(line));
  return lines_.back();
}

const ThoughtLine& ThoughtLog::record_summary(std::size_t round, const std::optional<std::string>& summary,
                                              bool failed, const std::string& failure, double timestamp) {
  ThoughtLine line;
  line.icon = ThoughtIcon::summary;
  line.round = round;
  line.timestamp = timestamp;
  if (failed) {
    line.text = std::string(kRoundFailedPrefix) + (failure.empty() ? std::string(kNoSummary) : failure);
  } else {
    line.text = summary && !summary->empty() ? *summary : std::string(kNoSummary);
  }
  lines_.push_back(std::move(line));
  return lines_.back();
}

std::vector<ThoughtLine> ThoughtLog::round_lines(std::size_t round) const {
  std::vector<ThoughtLine> out;
  for (const auto& l : lines_) {
    if (l.round == round) out.push_back(l);
  }
  return out;
}

std::string ThoughtLog::to_jsonl() const {
  std::string out;
  for (const auto& l : lines_) out += to_json(l).dump() + "\n";
  return out;
}

}  // namespace lami
