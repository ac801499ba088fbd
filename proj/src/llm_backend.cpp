#include "lami/llm_backend.hpp"

#include <cstdlib>

namespace lami {

using json = nlohmann::ordered_json;

void BackendConfig::validate() const {
  if (kind == BackendKind::remote && endpoint.empty()) {
    throw ConfigError("backend.endpoint", "required for the remote backend");
  }
  if (kind == BackendKind::scripted && fixture_path.empty()) {
    throw ConfigError("backend.fixture", "required for the scripted backend");
  }
  if (latency_simulation < 0) throw ConfigError("backend.latency_simulation", "must be >= 0");
}

ScriptedBackend::ScriptedBackend(Fixture fixture, Clock& clock, double latency) : clock_(clock), latency_(latency) {
  std::size_t number = 0;
  for (auto& round : fixture.rounds) {
    for (auto& step : round.steps) {
      entries_.push_back({std::move(step), false, ++number});
    }
    FixtureStep summary;
    summary.assistant.role = Role::assistant;
    summary.assistant.content = round.summary.value_or("");
    entries_.push_back({std::move(summary), true, number});
  }
}

std::size_t ScriptedBackend::scripted_steps() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.summary ? 0 : 1;
  return n;
}

void ScriptedBackend::check_previous_results(std::span<const ChatMessage> history) const {
  if (next_ == 0) return;
  const Entry& previous = entries_[next_ - 1];
  const auto& calls = previous.step.assistant.tool_calls;
  if (previous.summary || calls.empty() || !previous.step.expected_results) return;

  const auto& expected = *previous.step.expected_results;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const ChatMessage* found = nullptr;
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
      if (it->role == Role::tool && it->tool_call_id == calls[i].id) {
        found = &*it;
        break;
      }
      if (it->role == Role::assistant && it->tool_calls == calls) break;
    }
    const std::string actual = found ? found->content.value_or("") : "<missing result for " + calls[i].id + ">";
    if (actual != expected[i]) throw DivergenceError(previous.number, expected[i], actual);
  }
}

ChatMessage ScriptedBackend::complete(std::span<const ChatMessage> history, std::span<const FunctionSpec>) {
  if (history.empty() || history.front().role != Role::system) {
    throw BackendError("history must start with a system message", false);
  }
  check_previous_results(history);
  if (exhausted()) {
    throw BackendError("end of script: no step left for completion " + std::to_string(next_ + 1), false);
  }
  const Entry& entry = entries_[next_];
  const bool summary_requested = history.back().role == Role::user && history.back().content == kSummaryPrompt;
  if (entry.summary != summary_requested) {
    const std::string expected = entry.summary ? "summary request" : "step " + std::to_string(entry.number);
    const std::string actual = summary_requested ? "summary request" : "another completion";
    throw DivergenceError(entry.number, expected, actual);
  }
  clock_.sleep_for(latency_);
  ++next_;
  return entry.step.assistant;
}

RemoteBackend::RemoteBackend(BackendConfig config, std::unique_ptr<HttpTransport> transport, Clock& clock)
    : config_(std::move(config)), transport_(std::move(transport)), clock_(clock) {}

json RemoteBackend::build_request(std::span<const ChatMessage> history, std::span<const FunctionSpec> tools) const {
  json messages = json::array();
  for (const auto& m : history) messages.push_back(to_wire(m));
  json request = {{"model", config_.model}, {"messages", std::move(messages)}};
  if (!tools.empty()) {
    json wire_tools = json::array();
    for (const auto& t : tools) wire_tools.push_back(to_wire(t));
    request["tools"] = std::move(wire_tools);
    request["tool_choice"] = "auto";
  }
  if (config_.seed) request["seed"] = *config_.seed;
  return request;
}

ChatMessage RemoteBackend::parse_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed response body: ") + e.what(), false);
  }
  if (!doc.contains("choices") || !doc.at("choices").is_array() || doc.at("choices").empty()) {
    throw BackendError("response has no choices", false);
  }
  ChatMessage message = message_from_wire(doc.at("choices").at(0).at("message"));
  message.role = Role::assistant;
  if (!message.content && message.tool_calls.empty()) message.content = "";
  return message;
}

ChatMessage RemoteBackend::complete(std::span<const ChatMessage> history, std::span<const FunctionSpec> tools) {
  const std::string body = build_request(history, tools).dump();
  std::multimap<std::string, std::string> headers = {{"Content-Type", "application/json"}};
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const double started = clock_.now();
  for (std::size_t attempt = 0;; ++attempt) {
    std::string error;
    bool retryable = true;
    HttpResponse response = transport_->post("/chat/completions", body, headers);
    if (!response.transport_error.empty()) {
      error = "transport failure: " + response.transport_error;
    } else if (response.status >= 200 && response.status < 300) {
      ChatMessage message = parse_response(response.body);
      const double elapsed = clock_.now() - started;
      clock_.sleep_for(config_.latency_simulation - elapsed);
      return message;
    } else {
      error = "HTTP " + std::to_string(response.status) + ": " + response.body.substr(0, 200);
      retryable = response.status == 429 || response.status >= 500;
    }
    if (!retryable || attempt >= config_.retry_backoff.size()) throw BackendError(error, retryable);
    clock_.sleep_for(config_.retry_backoff[attempt]);
  }
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config, Clock& clock,
                                          std::unique_ptr<HttpTransport> transport) {
  config.validate();
  if (config.kind == BackendKind::scripted) {
    return std::make_unique<ScriptedBackend>(load_fixture(config.fixture_path), clock, config.latency_simulation);
  }
  if (!transport) transport = make_http_transport(config.endpoint, config.timeout);
  return std::make_unique<RemoteBackend>(config, std::move(transport), clock);
}

}  // namespace lami
