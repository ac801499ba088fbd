#include "lami/chat.hpp"

#include "lami/error.hpp"

namespace lami {

using json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  if (text == "tool") return Role::tool;
  throw PreconditionError("unknown chat role: " + std::string(text));
}

void validate(const ChatMessage& message) {
  if (message.role == Role::tool && !message.tool_call_id) {
    throw PreconditionError("tool message without tool_call_id");
  }
  if (message.role == Role::assistant && !message.content && message.tool_calls.empty()) {
    throw PreconditionError("assistant message without content or tool calls");
  }
}

const ParameterSpec* FunctionSpec::parameter(std::string_view name) const {
  for (const auto& p : parameters) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

json to_wire(const ChatMessage& message) {
  json node = {{"role", std::string(to_string(message.role))}};
  node["content"] = message.content ? json(*message.content) : json(nullptr);
  if (!message.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& call : message.tool_calls) {
      calls.push_back({{"id", call.id},
                       {"type", "function"},
                       {"function", {{"name", call.function_name}, {"arguments", call.arguments}}}});
    }
    node["tool_calls"] = std::move(calls);
  }
  if (message.tool_call_id) node["tool_call_id"] = *message.tool_call_id;
  return node;
}

ChatMessage message_from_wire(const json& node) {
  if (!node.is_object()) throw PreconditionError("chat message must be an object");
  ChatMessage message;
  message.role = role_from_string(node.value("role", "assistant"));
  if (node.contains("content") && node.at("content").is_string()) {
    message.content = node.at("content").get<std::string>();
  }
  if (node.contains("tool_calls") && node.at("tool_calls").is_array()) {
    for (const auto& call : node.at("tool_calls")) {
      ToolCall tc;
      tc.id = call.value("id", "");
      const auto& fn = call.at("function");
      tc.function_name = fn.value("name", "");
      const auto& args = fn.contains("arguments") ? fn.at("arguments") : json("{}");
      // Some servers send arguments as an object instead of a string.
      tc.arguments = args.is_string() ? args.get<std::string>() : args.dump();
      message.tool_calls.push_back(std::move(tc));
    }
  }
  if (node.contains("tool_call_id") && node.at("tool_call_id").is_string()) {
    message.tool_call_id = node.at("tool_call_id").get<std::string>();
  }
  return message;
}

json to_wire(const FunctionSpec& spec) {
  json properties = json::object();
  json required = json::array();
  for (const auto& p : spec.parameters) {
    json prop;
    prop["type"] = p.nullable ? json::array({p.type, "null"}) : json(p.type);
    prop["description"] = p.description;
    if (p.allowed) {
      json values = json::array();
      for (const auto& v : *p.allowed) values.push_back(v);
      if (p.nullable) values.push_back(nullptr);
      prop["enum"] = std::move(values);
    }
    properties[p.name] = std::move(prop);
    if (p.required) required.push_back(p.name);
  }
  return {{"type", "function"},
          {"function",
           {{"name", spec.name},
            {"description", spec.description},
            {"parameters",
             {{"type", "object"}, {"properties", properties}, {"required", required}}}}}};
}

FunctionSpec function_spec_from_wire(const json& node) {
  const auto& fn = node.at("function");
  FunctionSpec spec;
  spec.name = fn.at("name").get<std::string>();
  spec.description = fn.value("description", "");
  const auto& params = fn.at("parameters");
  const auto& properties = params.at("properties");
  std::vector<std::string> order;
  for (const auto& [key, value] : properties.items()) order.push_back(key);
  const auto required = params.value("required", json::array());
  for (const auto& name : order) {
    const auto& prop = properties.at(name);
    ParameterSpec p;
    p.name = name;
    if (prop.at("type").is_array()) {
      for (const auto& t : prop.at("type")) {
        if (t == "null") {
          p.nullable = true;
        } else {
          p.type = t.get<std::string>();
        }
      }
    } else {
      p.type = prop.at("type").get<std::string>();
    }
    p.description = prop.value("description", "");
    if (prop.contains("enum")) {
      std::vector<std::string> values;
      for (const auto& v : prop.at("enum")) {
        if (!v.is_null()) values.push_back(v.get<std::string>());
      }
      p.allowed = std::move(values);
    }
    p.required = std::find(required.begin(), required.end(), json(name)) != required.end();
    spec.parameters.push_back(std::move(p));
  }
  return spec;
}

}  // namespace lami
