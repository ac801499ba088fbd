#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace lami {

// Appended as a user message after every round to obtain the reasoning
// summary shown in the thought feed.
inline constexpr std::string_view kSummaryPrompt = "Summarize in one sentence why you acted as you did.";

struct ToolCall {
  std::string id;
  std::string function_name;
  std::string arguments;  // JSON object text, exactly as the backend sent it

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct ChatMessage {
  Role role = Role::user;
  std::optional<std::string> content;
  std::vector<ToolCall> tool_calls;
  std::optional<std::string> tool_call_id;  // tool role only

  static ChatMessage system(std::string text) { return {Role::system, std::move(text), {}, std::nullopt}; }
  static ChatMessage user(std::string text) { return {Role::user, std::move(text), {}, std::nullopt}; }
  static ChatMessage tool_result(std::string call_id, std::string text) {
    return {Role::tool, std::move(text), {}, std::move(call_id)};
  }

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Throws PreconditionError when a message breaks the role invariants.
void validate(const ChatMessage& message);

struct ParameterSpec {
  std::string name;
  std::string type = "string";
  std::string description;
  std::optional<std::vector<std::string>> allowed;
  bool nullable = false;
  bool required = true;

  friend bool operator==(const ParameterSpec&, const ParameterSpec&) = default;
};

struct FunctionSpec {
  std::string name;
  std::string description;
  std::vector<ParameterSpec> parameters;

  const ParameterSpec* parameter(std::string_view name) const;

  friend bool operator==(const FunctionSpec&, const FunctionSpec&) = default;
};

// Chat-completions wire shapes.
nlohmann::ordered_json to_wire(const ChatMessage& message);
ChatMessage message_from_wire(const nlohmann::ordered_json& node);
nlohmann::ordered_json to_wire(const FunctionSpec& spec);
FunctionSpec function_spec_from_wire(const nlohmann::ordered_json& node);

}  // namespace lami
