#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lami/scene.hpp"

namespace lami {

struct SpeechEvent {
  std::string sender;
  std::string receiver;  // a person, or "the_robot"
  std::string utterance;
};

enum class ActivityKind { pouring, generic };

struct ActivityEvent {
  ActivityKind kind = ActivityKind::generic;
  std::string actor;
  std::vector<std::string> objects;
  std::string text;
};

// "<sender> said to <receiver>: <utterance>". Throws PreconditionError when
// the sender addresses itself or a participant is not in the scene.
std::string render_speech(const Scene& scene, const SpeechEvent& event);

// Rising-edge pouring detector: reports a person holding a container that is
// tilted toward another container, unless the same pour was already under
// way in `previous`. Persons are scanned in declaration order.
std::optional<ActivityEvent> detect_pouring(const Scene& previous, const Scene& current);

enum class ResultKind { positive, negative, technical_problem };

// Values substituted into (or recovered from) a result template. Which
// fields matter depends on the function.
struct ResultFields {
  ResultKind kind = ResultKind::positive;
  std::string person;
  std::string object;
  std::string target;
  std::string occluder;
  std::string text;
  std::string message;
  std::string suggestion;
  std::vector<std::string> names;

  friend bool operator==(const ResultFields&, const ResultFields&) = default;
};

// True when `function_name` has result templates.
bool has_result_template(std::string_view function_name);

// Renders the result text the backend sees. Throws PreconditionError for
// functions without templates or kinds a function does not produce.
std::string render_result(std::string_view function_name, const ResultFields& fields);

// Inverse of render_result, used by the replay validator. Returns nullopt
// when the text matches none of the function's templates.
std::optional<ResultFields> parse_result(std::string_view function_name, std::string_view text);

// "RESULT: '<message>' SUGGESTION: <suggestion>". Throws PreconditionError
// for successful outcomes or outcomes without a suggestion.
std::string render_failure_with_suggestion(const ActionOutcome& outcome);

}  // namespace lami
