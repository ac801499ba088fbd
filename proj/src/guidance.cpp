#include <algorithm>
#include <fstream>
#include <set>

#include "lami/planner.hpp"

namespace lami {

using ojson = nlohmann::ordered_json;

const std::string_view kDefaultSystemPrompt =
    "You are a friendly, attentive, and silent service bot. "
    "You are in control of a physical robot called 'the_robot' and observe humans talking in the form "
    "'<sender> said to <receiver>: <instruction>'. "
    "Always infer the <instruction> and who is <sender> and <receiver>. "
    "You have access to functions for gathering information, acting physically, and speaking out loud. "
    "You MUST behave as follows: "
    "1. If 'the_robot' is the <receiver>, you MUST help or answer. "
    "2. When identifying requests or questions within the human conversation, check for ALL reasons that could "
    "hinder the <receiver> from performing or answering the <instruction>. "
    "2.a) If there is NO hindering reason for the <receiver>, then you MUST do nothing and be silent. "
    "2.b) If there is a hindering reason for the <receiver>, then you MUST ALWAYS first speak and explain the reason "
    "for your help to the humans. "
    "2.c) AFTER your spoken explanation, you can ACT to solve the <instruction>, always addressing the <sender> with "
    "your actions. "
    "3. If you recognize a mistake in the humans conversation, you should help them and provide the missing or wrong "
    "information. "
    "IMPORTANT: Obey the following rules: "
    "1. Always start by gathering relevant information using the functions 'get_objects', 'get_persons' and the "
    "status of the <receiver>. "
    "2. If you want to speak out loud, you must use the speak function and be concise. "
    "3. Try to infer which objects are meant when the name is unclear, but ask for clarification if unsure. "
    "4. ALWAYS call 'is_person_busy_or_idle' to check if <receiver> is busy or idle before helping. "
    "5. Prefer a handover over move_to as it is more accommodating, UNLESS the person is busy, then always use "
    "move_to. "
    "6. When executing physical actions, you should be as supportive as possible. "
    "7. You MUST call the 'stop' function to indicate you are finished. "
    "When calling each function, call robot_facial_expression() at the same time to communicate you intent."
    "When calling can_person_see_object(), the robot need to look at the person.";

std::string_view to_string(GranularityTier tier) {
  switch (tier) {
    case GranularityTier::single: return "single";
    case GranularityTier::composite: return "composite";
    case GranularityTier::aggregate: return "aggregate";
  }
  return "composite";
}

std::string_view to_string(HistoryScope scope) { return scope == HistoryScope::session ? "session" : "round"; }

std::string_view to_string(CallStatus status) {
  switch (status) {
    case CallStatus::ok: return "ok";
    case CallStatus::failed: return "failed";
    case CallStatus::error: return "error";
  }
  return "error";
}

std::vector<ExampleMessage> GuidanceConfig::default_examples() {
  auto expression = [](std::string ears) {
    return ExampleCall{"robot_facial_expression",
                       ojson{{"head_motion", nullptr}, {"ears_lid_motion", ears}, {"gazed_target", "the_cola_bottle"}}};
  };
  return {
      {expression("observe"),
       {"can_person_see_object", ojson{{"person_name", "Daniel"}, {"object_name", "the_cola_bottle"}}}},
      {expression("focus"),
       {"move_object_to_person", ojson{{"person_name", "Felix"}, {"object_name", "the_cola_bottle"}}}},
      {expression("focus"),
       {"speak", ojson{{"person_name", "Felix"}, {"text", "Here is the coke, you can now pass it to Felix."}}}},
  };
}

namespace {

void reject_unknown_keys(const ojson& node, std::initializer_list<std::string_view> allowed, const std::string& at) {
  for (const auto& [key, value] : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(at.empty() ? key : at + "." + key, "unknown field");
    }
  }
}

std::string require_string(const ojson& node, const std::string& key, const std::string& at) {
  if (!node.contains(key) || !node.at(key).is_string()) throw ConfigError(at + key, "expected a string");
  return node.at(key).get<std::string>();
}

}  // namespace

GuidanceConfig guidance_from_json(const ojson& doc) {
  if (!doc.is_object()) throw ConfigError("", "guidance must be an object");
  reject_unknown_keys(doc,
                      {"system_prompt", "examples", "enabled_functions", "granularity_tier", "function_descriptions",
                       "history_scope", "max_iterations"},
                      "");
  GuidanceConfig g;
  if (doc.contains("system_prompt")) g.system_prompt = require_string(doc, "system_prompt", "");
  if (doc.contains("examples")) {
    const auto& examples = doc.at("examples");
    if (!examples.is_array()) throw ConfigError("examples", "expected a list of tool-call lists");
    g.examples.clear();
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const std::string at = "examples[" + std::to_string(i) + "]";
      if (!examples[i].is_array() || examples[i].empty()) throw ConfigError(at, "expected a non-empty list of calls");
      ExampleMessage message;
      for (std::size_t j = 0; j < examples[i].size(); ++j) {
        const auto& call = examples[i][j];
        const std::string cat = at + "[" + std::to_string(j) + "]";
        if (!call.is_object()) throw ConfigError(cat, "expected an object");
        reject_unknown_keys(call, {"name", "arguments"}, cat);
        ExampleCall c;
        c.name = require_string(call, "name", cat + ".");
        if (call.contains("arguments")) {
          if (!call.at("arguments").is_object()) throw ConfigError(cat + ".arguments", "expected an object");
          c.arguments = call.at("arguments");
        }
        message.push_back(std::move(c));
      }
      g.examples.push_back(std::move(message));
    }
  }
  if (doc.contains("enabled_functions")) {
    const auto& list = doc.at("enabled_functions");
    if (!list.is_array()) throw ConfigError("enabled_functions", "expected a list of names");
    std::vector<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) throw ConfigError("enabled_functions[" + std::to_string(i) + "]", "expected a name");
      names.push_back(list[i].get<std::string>());
    }
    g.enabled_functions = std::move(names);
  }
  if (doc.contains("granularity_tier")) {
    const auto tier = require_string(doc, "granularity_tier", "");
    if (tier == "single") {
      g.granularity_tier = GranularityTier::single;
    } else if (tier == "composite") {
      g.granularity_tier = GranularityTier::composite;
    } else if (tier == "aggregate") {
      g.granularity_tier = GranularityTier::aggregate;
    } else {
      throw ConfigError("granularity_tier", "expected single, composite or aggregate");
    }
  }
  if (doc.contains("function_descriptions")) {
    const auto& map = doc.at("function_descriptions");
    if (!map.is_object()) throw ConfigError("function_descriptions", "expected an object");
    for (const auto& [name, text] : map.items()) {
      if (!text.is_string()) throw ConfigError("function_descriptions." + name, "expected a string");
      g.function_descriptions[name] = text.get<std::string>();
    }
  }
  if (doc.contains("history_scope")) {
    const auto scope = require_string(doc, "history_scope", "");
    if (scope == "session") {
      g.history_scope = HistoryScope::session;
    } else if (scope == "round") {
      g.history_scope = HistoryScope::round;
    } else {
      throw ConfigError("history_scope", "expected session or round");
    }
  }
  if (doc.contains("max_iterations")) {
    const auto& v = doc.at("max_iterations");
    if (!v.is_number_integer() || v.get<int>() < 1) throw ConfigError("max_iterations", "expected an integer >= 1");
    g.max_iterations = v.get<int>();
  }
  return g;
}

ojson guidance_to_json(const GuidanceConfig& g) {
  ojson examples = ojson::array();
  for (const auto& message : g.examples) {
    ojson calls = ojson::array();
    for (const auto& c : message) calls.push_back({{"name", c.name}, {"arguments", c.arguments}});
    examples.push_back(std::move(calls));
  }
  ojson doc = {{"system_prompt", g.system_prompt}, {"examples", std::move(examples)}};
  if (g.enabled_functions) doc["enabled_functions"] = *g.enabled_functions;
  doc["granularity_tier"] = to_string(g.granularity_tier);
  doc["function_descriptions"] = ojson::object();
  for (const auto& [name, text] : g.function_descriptions) doc["function_descriptions"][name] = text;
  doc["history_scope"] = to_string(g.history_scope);
  doc["max_iterations"] = g.max_iterations;
  return doc;
}

GuidanceConfig load_guidance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open guidance file");
  try {
    return guidance_from_json(ojson::parse(in));
  } catch (const ojson::parse_error& e) {
    throw ConfigError(path, std::string("parse error: ") + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + e.path(), e.message());
  }
}

namespace {

std::set<std::string> effective_functions(const GuidanceConfig& g) {
  const auto tier = tier_functions(g.granularity_tier);
  std::set<std::string> out(tier.begin(), tier.end());
  if (g.enabled_functions) {
    std::set<std::string> allowed(g.enabled_functions->begin(), g.enabled_functions->end());
    std::erase_if(out, [&](const std::string& n) { return !allowed.contains(n); });
  }
  return out;
}

}  // namespace

std::vector<std::string> guidance_violations(const GuidanceConfig& g, const Registry& registry) {
  std::vector<std::string> out;
  const auto tier = tier_functions(g.granularity_tier);
  if (g.enabled_functions) {
    for (const auto& name : *g.enabled_functions) {
      if (!registry.find(name)) {
        out.push_back("enabled_functions: unknown function '" + name + "'");
      } else if (std::find(tier.begin(), tier.end(), name) == tier.end()) {
        out.push_back("enabled_functions: '" + name + "' is not available in granularity tier '" +
                      std::string(to_string(g.granularity_tier)) + "'");
      }
    }
  }
  const auto enabled = effective_functions(g);
  for (std::size_t i = 0; i < g.examples.size(); ++i) {
    for (std::size_t j = 0; j < g.examples[i].size(); ++j) {
      const auto& name = g.examples[i][j].name;
      const auto* f = registry.find(name);
      const std::string canonical = f && f->alias_of ? *f->alias_of : name;
      if (!enabled.contains(canonical)) {
        out.push_back("examples[" + std::to_string(i) + "][" + std::to_string(j) + "]: calls '" + name +
                      "', which is not enabled");
      }
    }
  }
  for (const auto& [name, text] : g.function_descriptions) {
    if (!registry.find(name)) out.push_back("function_descriptions: unknown function '" + name + "'");
  }
  if (g.max_iterations < 1) out.push_back("max_iterations: must be >= 1");
  return out;
}

void apply_guidance(Registry& registry, const GuidanceConfig& g) {
  const auto violations = guidance_violations(g, registry);
  if (!violations.empty()) throw ConfigError("guidance", violations.front());
  const auto enabled = effective_functions(g);
  for (const auto& name : registry.names()) {
    const auto* f = registry.find(name);
    if (f->alias_of) continue;
    registry.set_enabled(name, enabled.contains(name));
  }
  for (const auto& [name, text] : g.function_descriptions) registry.set_description(name, text);
}

std::string python_json(const ojson& v) {
  if (v.is_object()) {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, value] : v.items()) {
      if (!first) out += ", ";
      first = false;
      out += ojson(key).dump() + ": " + python_json(value);
    }
    return out + "}";
  }
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) out += ", ";
      out += python_json(v[i]);
    }
    return out + "]";
  }
  return v.dump();
}

std::string render_example(const ExampleMessage& example) {
  std::string out = "tool_calls=[";
  for (std::size_t i = 0; i < example.size(); ++i) {
    if (i > 0) out += ", ";
    out += "ChatCompletionMessageToolCall(id='...', function=Function(arguments='" + python_json(example[i].arguments) +
           "', name='" + example[i].name + "'), type='function')";
  }
  return out + "]";
}

std::string build_system_message(const GuidanceConfig& g, const ClipCatalog& catalog, const Registry& registry) {
  for (std::size_t i = 0; i < g.examples.size(); ++i) {
    for (const auto& call : g.examples[i]) {
      if (!registry.enabled(call.name)) {
        throw ConfigError("examples[" + std::to_string(i) + "]",
                          "calls '" + call.name + "', which is not enabled");
      }
    }
  }
  std::string out = g.system_prompt;
  if (!catalog.clips().empty()) out += "\n\n" + catalog.describe();
  if (!g.examples.empty()) {
    out += "\n\n";
    out += kExamplesIntro;
    for (const auto& example : g.examples) out += "\n" + render_example(example);
  }
  return out;
}

}  // namespace lami
