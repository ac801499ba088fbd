#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/chat.hpp"
#include "lami/clock.hpp"
#include "lami/error.hpp"
#include "lami/fixture.hpp"

namespace lami {

class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retryable) : Error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// The scripted oracle saw a result text (or request shape) the fixture does
// not expect. `step` is the 1-based completion index within the fixture.
class DivergenceError : public BackendError {
 public:
  DivergenceError(std::size_t step, std::string expected, std::string actual)
      : BackendError("divergence at step " + std::to_string(step) + ": expected \"" + expected + "\", got \"" +
                         actual + "\"",
                     false),
        step_(step),
        expected_(std::move(expected)),
        actual_(std::move(actual)) {}

  std::size_t step() const noexcept { return step_; }
  const std::string& expected() const noexcept { return expected_; }
  const std::string& actual() const noexcept { return actual_; }

 private:
  std::size_t step_;
  std::string expected_;
  std::string actual_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Blocking. `history` starts with the system message.
  virtual ChatMessage complete(std::span<const ChatMessage> history, std::span<const FunctionSpec> tools) = 0;
};

enum class BackendKind { remote, scripted };

struct BackendConfig {
  BackendKind kind = BackendKind::scripted;
  std::string endpoint;  // e.g. "https://api.openai.com/v1"
  std::string model = "gpt-4-1106-preview";
  std::optional<std::int64_t> seed;
  double latency_simulation = 0.0;  // seconds added to every response
  std::string fixture_path;
  std::vector<double> retry_backoff = {0.5, 2.0};
  std::string api_key_env = "LAMI_API_KEY";
  double timeout = 60.0;

  // Throws ConfigError when the kind-specific fields are missing.
  void validate() const;
};

// Replays a fixture. Before answering step k it checks that the tool results
// in `history` for step k-1 match the fixture's expectations.
class ScriptedBackend final : public ChatBackend {
 public:
  ScriptedBackend(Fixture fixture, Clock& clock, double latency = 0.0);

  ChatMessage complete(std::span<const ChatMessage> history, std::span<const FunctionSpec> tools) override;

  // Number of completions served so far.
  std::size_t position() const { return next_; }
  // Completions in the script, excluding summary replies.
  std::size_t scripted_steps() const;
  bool exhausted() const { return next_ >= entries_.size(); }
  void reset() { next_ = 0; }

 private:
  struct Entry {
    FixtureStep step;
    bool summary = false;
    std::size_t number = 0;  // 1-based step number among non-summary entries
  };

  void check_previous_results(std::span<const ChatMessage> history) const;

  std::vector<Entry> entries_;
  Clock& clock_;
  double latency_;
  std::size_t next_ = 0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string transport_error;  // non-empty when no HTTP response arrived
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::multimap<std::string, std::string>& headers) = 0;
};

// Transport over cpp-httplib. `base_url` is "scheme://host[:port][/prefix]".
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, double timeout_seconds);

// Chat-completions client with tool calling.
class RemoteBackend final : public ChatBackend {
 public:
  RemoteBackend(BackendConfig config, std::unique_ptr<HttpTransport> transport, Clock& clock);

  ChatMessage complete(std::span<const ChatMessage> history, std::span<const FunctionSpec> tools) override;

  nlohmann::ordered_json build_request(std::span<const ChatMessage> history,
                                       std::span<const FunctionSpec> tools) const;
  static ChatMessage parse_response(const std::string& body);

 private:
  BackendConfig config_;
  std::unique_ptr<HttpTransport> transport_;
  Clock& clock_;
};

// Builds the configured backend. A scripted backend never touches
// `transport`; pass nullptr to use the default HTTP transport for remote.
std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config, Clock& clock,
                                          std::unique_ptr<HttpTransport> transport = nullptr);

}  // namespace lami
