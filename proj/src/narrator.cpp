#include "lami/narrator.hpp"

#include <array>
#include <regex>

#include "lami/error.hpp"

namespace lami {
namespace {

struct Template {
  std::string_view function;
  ResultKind kind;
  std::string_view pattern;
};

constexpr std::string_view kResultSuggestion = "RESULT: '{message}' SUGGESTION: {suggestion}";

// Result strings handed back to the backend. These are test contracts; see
// docs/strings.md.
constexpr std::array kTemplates = {
    Template{"get_objects", ResultKind::positive, "Following objects were observed: {names}."},
    Template{"get_objects", ResultKind::negative, "No objects were observed."},
    Template{"get_persons", ResultKind::positive, "Following persons were observed: {names}."},
    Template{"get_persons", ResultKind::negative, "No persons were observed."},
    Template{"can_person_reach_object", ResultKind::positive, "{person} can reach {object}."},
    Template{"can_person_reach_object", ResultKind::negative, "{person} cannot reach {object}."},
    Template{"can_person_reach_object", ResultKind::technical_problem,
             "It could not be determined if {person} can reach {object}. There were technical problems."},
    Template{"can_person_see_object", ResultKind::positive, "{person} can see {object}."},
    Template{"can_person_see_object", ResultKind::negative, "{person} cannot see {object}, it is occluded by {occluder}"},
    Template{"can_person_see_object", ResultKind::technical_problem,
             "It could not be determined if {person} can see {object}. There were technical problems."},
    Template{"is_person_busy_or_idle", ResultKind::positive, "{person} is idle."},
    Template{"is_person_busy_or_idle", ResultKind::negative, "{person} is busy."},
    Template{"is_person_busy_or_idle", ResultKind::technical_problem,
             "It could not be determined if {person} is busy. There were technical problems."},
    Template{"is_person_busy", ResultKind::positive, "{person} is not busy."},
    Template{"is_person_busy", ResultKind::negative, "{person} is busy."},
    Template{"is_person_busy", ResultKind::technical_problem,
             "It could not be determined if {person} is busy. There were technical problems."},
    Template{"move_object_to_person", ResultKind::positive, "You moved {object} to {person}."},
    Template{"move_object_to_person", ResultKind::negative, "You were not able to move {object} to {person}. {message}"},
    Template{"hand_over", ResultKind::positive, "You handed {object} over to {person}."},
    Template{"hand_over", ResultKind::negative, kResultSuggestion},
    Template{"put_object_on_object", ResultKind::positive, "You put {object} on {target}."},
    Template{"put_object_on_object", ResultKind::negative, kResultSuggestion},
    Template{"pour_into", ResultKind::positive, "You poured {object} into {target}."},
    Template{"pour_into", ResultKind::negative, kResultSuggestion},
    Template{"speak", ResultKind::positive, "You said to {person}: {text}"},
    Template{"speak", ResultKind::technical_problem, "You were not able to speak. There were technical problems."},
    Template{"robot_facial_expression", ResultKind::positive, "The robot performed facial expressions."},
    Template{"stop", ResultKind::positive, "You successfully finished the task."},
};

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

template <typename Fields>
auto field_slot(Fields& f, std::string_view key) -> decltype(&f.person) {
  if (key == "person") return &f.person;
  if (key == "object") return &f.object;
  if (key == "target") return &f.target;
  if (key == "occluder") return &f.occluder;
  if (key == "text") return &f.text;
  if (key == "message") return &f.message;
  if (key == "suggestion") return &f.suggestion;
  return nullptr;
}

const Template* find_template(std::string_view function, ResultKind kind) {
  for (const auto& t : kTemplates) {
    if (t.function == function && t.kind == kind) return &t;
  }
  return nullptr;
}

std::string substitute(std::string_view pattern, const ResultFields& fields) {
  std::string out;
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(pattern.substr(pos));
      break;
    }
    const auto close = pattern.find('}', open);
    out.append(pattern.substr(pos, open - pos));
    const auto key = pattern.substr(open + 1, close - open - 1);
    if (key == "names") {
      out += join(fields.names, ", ");
    } else {
      out += *field_slot(fields, key);
    }
    pos = close + 1;
  }
  return out;
}

std::string regex_escape(std::string_view literal) {
  static const std::string special = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : literal) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

std::optional<ResultFields> match_template(const Template& t, std::string_view text) {
  std::string regex_source = "^";
  std::vector<std::string> keys;
  std::size_t pos = 0;
  const auto pattern = t.pattern;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string_view::npos) {
      regex_source += regex_escape(pattern.substr(pos));
      break;
    }
    const auto close = pattern.find('}', open);
    regex_source += regex_escape(pattern.substr(pos, open - pos));
    const auto key = std::string(pattern.substr(open + 1, close - open - 1));
    // Entity names never contain spaces; free text may.
    const bool is_name = key == "person" || key == "object" || key == "target" || key == "occluder";
    regex_source += is_name ? "([^ ]+?)" : "([\\s\\S]*?)";
    keys.push_back(key);
    pos = close + 1;
  }
  regex_source += "$";

  const std::regex re(regex_source);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, re)) return std::nullopt;

  ResultFields fields;
  fields.kind = t.kind;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::string value = m[i + 1].str();
    if (keys[i] == "names") {
      std::size_t start = 0;
      while (true) {
        const auto comma = value.find(", ", start);
        fields.names.push_back(value.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 2;
      }
    } else {
      *field_slot(fields, keys[i]) = std::move(value);
    }
  }
  return fields;
}

bool is_container(const Scene& scene, const std::string& name) {
  const auto* o = scene.find_object(name);
  return o && o->affordances.has(Affordance::container);
}

struct Pour {
  std::string actor;
  std::string source;
  std::string destination;
  friend bool operator==(const Pour&, const Pour&) = default;
};

std::vector<Pour> active_pours(const Scene& scene) {
  std::vector<Pour> pours;
  for (const auto& person : scene.persons()) {
    for (const auto& object : scene.objects()) {
      if (object.held_by != person.name || !object.affordances.has(Affordance::container)) continue;
      if (!object.tilted_toward || *object.tilted_toward == object.name) continue;
      if (!is_container(scene, *object.tilted_toward)) continue;
      pours.push_back({person.name, object.name, *object.tilted_toward});
    }
  }
  return pours;
}

}  // namespace

std::string render_speech(const Scene& scene, const SpeechEvent& event) {
  if (event.sender == event.receiver) {
    throw PreconditionError("sender and receiver must differ: " + event.sender);
  }
  if (!scene.find_person(event.sender)) {
    throw PreconditionError("unknown speaker: " + event.sender);
  }
  if (event.receiver != kRobotName && !scene.find_person(event.receiver)) {
    throw PreconditionError("unknown addressee: " + event.receiver);
  }
  return event.sender + " said to " + event.receiver + ": " + event.utterance;
}

std::optional<ActivityEvent> detect_pouring(const Scene& previous, const Scene& current) {
  const auto before = active_pours(previous);
  for (const auto& pour : active_pours(current)) {
    if (std::find(before.begin(), before.end(), pour) != before.end()) continue;
    ActivityEvent event;
    event.kind = ActivityKind::pouring;
    event.actor = pour.actor;
    event.objects = {pour.source, pour.destination};
    event.text = pour.actor + " is pouring " + pour.source + " into " + pour.destination;
    return event;
  }
  return std::nullopt;
}

bool has_result_template(std::string_view function_name) {
  return std::any_of(kTemplates.begin(), kTemplates.end(),
                     [&](const Template& t) { return t.function == function_name; });
}

std::string render_result(std::string_view function_name, const ResultFields& fields) {
  if (!has_result_template(function_name)) {
    throw PreconditionError("no result template for function " + std::string(function_name));
  }
  const Template* t = find_template(function_name, fields.kind);
  if (!t) {
    throw PreconditionError("function " + std::string(function_name) + " has no template for this result kind");
  }
  return substitute(t->pattern, fields);
}

std::optional<ResultFields> parse_result(std::string_view function_name, std::string_view text) {
  for (const auto& t : kTemplates) {
    if (t.function != function_name) continue;
    if (auto fields = match_template(t, text)) return fields;
  }
  return std::nullopt;
}

std::string render_failure_with_suggestion(const ActionOutcome& outcome) {
  if (outcome.success) throw PreconditionError("outcome is a success");
  if (!outcome.suggestion) throw PreconditionError("outcome carries no suggestion");
  ResultFields fields;
  fields.message = outcome.message;
  fields.suggestion = *outcome.suggestion;
  return substitute(kResultSuggestion, fields);
}

}  // namespace lami
