#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/animation.hpp"
#include "lami/chat.hpp"
#include "lami/expresser.hpp"
#include "lami/llm_backend.hpp"
#include "lami/scene.hpp"
#include "lami/transcript.hpp"

namespace lami {

// Default system prompt. The missing space after "intent." is deliberate:
// the prompt is reproduced as it was originally sent.
extern const std::string_view kDefaultSystemPrompt;
inline constexpr std::string_view kExamplesIntro =
    "For example, when call move_object_to_person(), can_person_see_object(), can_person_reach_object(), speak(), "
    "you also need to call robot_facial_expression(), such as:";

enum class GranularityTier { single, composite, aggregate };
enum class HistoryScope { session, round };

std::string_view to_string(GranularityTier tier);
std::string_view to_string(HistoryScope scope);

// One few-shot example call; arguments keep their key order.
struct ExampleCall {
  std::string name;
  nlohmann::ordered_json arguments = nlohmann::ordered_json::object();

  friend bool operator==(const ExampleCall&, const ExampleCall&) = default;
};
using ExampleMessage = std::vector<ExampleCall>;

struct GuidanceConfig {
  std::string system_prompt{kDefaultSystemPrompt};
  std::vector<ExampleMessage> examples = default_examples();
  // Explicit allow-list, intersected with the tier's functions. nullopt
  // enables everything the tier provides.
  std::optional<std::vector<std::string>> enabled_functions;
  GranularityTier granularity_tier = GranularityTier::composite;
  std::map<std::string, std::string> function_descriptions;  // docstring overrides
  HistoryScope history_scope = HistoryScope::session;
  int max_iterations = 20;

  static std::vector<ExampleMessage> default_examples();
};

GuidanceConfig guidance_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json guidance_to_json(const GuidanceConfig& guidance);
GuidanceConfig load_guidance(const std::string& path);

enum class FunctionKind { query, action, speak, express, control };
enum class CallStatus { ok, failed, error };

std::string_view to_string(CallStatus status);

struct CallOutcome {
  std::string text;
  CallStatus status = CallStatus::ok;
};

using Arguments = nlohmann::ordered_json;
using Handler = std::function<CallOutcome(const Arguments& args)>;

struct RegisteredFunction {
  FunctionSpec spec;
  FunctionKind kind = FunctionKind::query;
  Handler handler;
  bool hidden = false;  // dispatchable but not advertised (aliases)
  bool enabled = true;
  std::optional<std::string> alias_of;
};

class Registry {
 public:
  // Throws ConfigError on a duplicate name.
  void add(RegisteredFunction function);

  const RegisteredFunction* find(std::string_view name) const;
  bool enabled(std::string_view name) const;
  // Enables or disables a function together with its aliases.
  void set_enabled(std::string_view name, bool enabled);
  void set_description(std::string_view name, std::string description);

  std::vector<std::string> names() const;
  // Specs sent to the backend: enabled and not hidden, in registration order.
  std::vector<FunctionSpec> advertised() const;

  // Validates the arguments against the spec and runs the handler. Never
  // throws for bad input; problems come back as error outcomes.
  CallOutcome dispatch(const ToolCall& call) const;
  std::optional<FunctionKind> kind_of(std::string_view name) const;

 private:
  std::vector<RegisteredFunction> functions_;
};

// Everything the builtin handlers act on. The expresser may be null, in
// which case expression calls are validated but not performed.
struct BuiltinContext {
  Scene* scene = nullptr;
  Expresser* expresser = nullptr;
  const ClipCatalog* catalog = nullptr;
  std::function<void(const std::string& person, const std::string& text)> on_speak;
};

Registry register_builtin_functions(const BuiltinContext& context);

// Functions a granularity tier makes available.
std::vector<std::string> tier_functions(GranularityTier tier);

// Returns every inconsistency between the guidance and the registry
// (unknown or tier-excluded functions, examples calling disabled ones).
std::vector<std::string> guidance_violations(const GuidanceConfig& guidance, const Registry& registry);

// Applies tier, allow-list and description overrides. Throws ConfigError
// with the first violation.
void apply_guidance(Registry& registry, const GuidanceConfig& guidance);

// Prompt, clip catalog block, then the examples block. Throws ConfigError
// when an example calls a function that is not enabled in `registry`.
std::string build_system_message(const GuidanceConfig& guidance, const ClipCatalog& catalog,
                                 const Registry& registry);

// Standalone composite check: see, reach and busy results joined by spaces.
std::string check_hindering_reasons(const Scene& scene, const std::string& person_name,
                                    const std::string& object_name);

// Renders an example call the way tool calls are printed by common client
// libraries, with Python-style JSON argument text.
std::string render_example(const ExampleMessage& example);
std::string python_json(const nlohmann::ordered_json& value);

// Round lifecycle notifications. All callbacks are optional and must not
// block; they run on the planner's thread.
struct PlannerHooks {
  std::function<void(const std::string& trigger)> on_trigger;
  std::function<void()> on_request_begin;
  std::function<void()> on_request_end;
  std::function<void(const ToolCall& call)> on_dispatch_begin;
  // `kind` is empty for calls to unknown functions.
  std::function<void(const ToolCall& call, const CallOutcome& outcome, std::optional<FunctionKind> kind)>
      on_dispatch_end;
  std::function<void(const std::string& text)> on_reasoning;
  std::function<void(const QueryRound& round)> on_round_end;
};

inline constexpr std::string_view kSkippedAfterStop = "Not executed: the task was already finished.";

class Planner {
 public:
  Planner(const GuidanceConfig& guidance, const Registry& registry, ChatBackend& backend, std::string system_message);

  // Runs one trigger-to-stop loop plus the summary request. Backend errors
  // mark the round failed instead of propagating.
  // `scene_edits` are recorded with the round for replay.
  QueryRound run_round(const std::string& trigger, const PlannerHooks& hooks = {},
                       std::vector<std::string> scene_edits = {});

  const std::vector<ChatMessage>& history() const { return history_; }
  const Transcript& transcript() const { return transcript_; }
  void set_backend_seed(std::optional<std::int64_t> seed) { transcript_.backend_seed = seed; }

 private:
  void dispatch_message(const ChatMessage& message, RoundStep& step, QueryRound& round, const PlannerHooks& hooks);
  ChatMessage request(const PlannerHooks& hooks);

  const Registry& registry_;
  ChatBackend& backend_;
  std::string system_message_;
  HistoryScope history_scope_;
  int max_iterations_;
  std::vector<ChatMessage> history_;
  Transcript transcript_;
};

}  // namespace lami
