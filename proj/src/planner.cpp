#include "lami/planner.hpp"

#include <algorithm>
#include <numeric>

namespace lami {

Planner::Planner(const GuidanceConfig& guidance, const Registry& registry, ChatBackend& backend,
                 std::string system_message)
    : registry_(registry),
      backend_(backend),
      system_message_(std::move(system_message)),
      history_scope_(guidance.history_scope),
      max_iterations_(guidance.max_iterations) {}

ChatMessage Planner::request(const PlannerHooks& hooks) {
  if (hooks.on_request_begin) hooks.on_request_begin();
  ChatMessage reply;
  try {
    const auto tools = registry_.advertised();
    reply = backend_.complete(history_, tools);
  } catch (...) {
    if (hooks.on_request_end) hooks.on_request_end();
    throw;
  }
  if (hooks.on_request_end) hooks.on_request_end();
  reply.role = Role::assistant;
  reply.tool_call_id.reset();
  // Results are linked to calls by id, so every call needs a distinct one.
  for (std::size_t i = 0; i < reply.tool_calls.size(); ++i) {
    if (reply.tool_calls[i].id.empty()) reply.tool_calls[i].id = "call_" + std::to_string(i);
  }
  return reply;
}

void Planner::dispatch_message(const ChatMessage& message, RoundStep& step, QueryRound& round,
                               const PlannerHooks& hooks) {
  const auto& calls = message.tool_calls;
  std::vector<std::size_t> order(calls.size());
  std::iota(order.begin(), order.end(), 0);
  // Expressions go first so the face starts moving with (not after) the
  // action it accompanies.
  std::stable_partition(order.begin(), order.end(), [&](std::size_t i) {
    return registry_.kind_of(calls[i].function_name) == FunctionKind::express;
  });

  std::vector<std::string> results(calls.size());
  for (const std::size_t i : order) {
    const auto& call = calls[i];
    if (round.stopped) {
      results[i] = kSkippedAfterStop;
      continue;
    }
    if (hooks.on_dispatch_begin) hooks.on_dispatch_begin(call);
    const CallOutcome outcome = registry_.dispatch(call);
    results[i] = outcome.text;
    step.dispatch_order.push_back(call.id);
    if (hooks.on_dispatch_end) hooks.on_dispatch_end(call, outcome, registry_.kind_of(call.function_name));
    if (registry_.kind_of(call.function_name) == FunctionKind::control && outcome.status == CallStatus::ok) {
      round.stopped = true;
    }
  }
  for (std::size_t i = 0; i < calls.size(); ++i) history_.push_back(ChatMessage::tool_result(calls[i].id, results[i]));
  step.results = std::move(results);
}

QueryRound Planner::run_round(const std::string& trigger, const PlannerHooks& hooks,
                              std::vector<std::string> scene_edits) {
  QueryRound round;
  round.trigger_event = trigger;
  round.scene_edits = std::move(scene_edits);
  if (history_scope_ == HistoryScope::round || history_.empty()) {
    history_.clear();
    history_.push_back(ChatMessage::system(system_message_));
  }
  if (hooks.on_trigger) hooks.on_trigger(trigger);
  history_.push_back(ChatMessage::user(trigger));

  try {
    for (int i = 0; i < max_iterations_ && !round.stopped; ++i) {
      ChatMessage reply = request(hooks);
      history_.push_back(reply);
      RoundStep step;
      step.assistant = reply;
      if (reply.tool_calls.empty()) {
        if (hooks.on_reasoning && reply.content && !reply.content->empty()) hooks.on_reasoning(*reply.content);
      } else {
        dispatch_message(reply, step, round, hooks);
      }
      round.steps.push_back(std::move(step));
    }
    history_.push_back(ChatMessage::user(std::string(kSummaryPrompt)));
    ChatMessage summary = request(hooks);
    summary.tool_calls.clear();
    if (!summary.content) summary.content = "";
    history_.push_back(summary);
    round.summary = *summary.content;
  } catch (const BackendError& e) {
    round.failed = true;
    round.failure = e.what();
  }

  transcript_.rounds.push_back(round);
  if (hooks.on_round_end) hooks.on_round_end(round);
  return round;
}

}  // namespace lami
