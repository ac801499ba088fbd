#include <algorithm>

#include "lami/narrator.hpp"
#include "lami/planner.hpp"

namespace lami {

namespace {

std::string python_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + items[i] + "'";
  }
  return out + "]";
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string arg_string(const Arguments& args, const char* key) {
  if (!args.contains(key) || args.at(key).is_null()) return {};
  return args.at(key).get<std::string>();
}

std::optional<std::string> arg_optional(const Arguments& args, const char* key) {
  if (!args.contains(key) || args.at(key).is_null()) return std::nullopt;
  return args.at(key).get<std::string>();
}

// Names from the backend are matched leniently (see Scene::resolve_entity)
// but echoed back exactly as written.
const SceneObject* lookup_object(const Scene& scene, const std::string& name) {
  if (const auto* o = scene.find_object(name)) return o;
  if (auto resolved = scene.resolve_entity(name)) return scene.find_object(*resolved);
  return nullptr;
}

const Person* lookup_person(const Scene& scene, const std::string& name) {
  if (const auto* p = scene.find_person(name)) return p;
  if (auto resolved = scene.resolve_entity(name)) return scene.find_person(*resolved);
  return nullptr;
}

ResultFields fields(ResultKind kind, std::string person, std::string object = {}) {
  ResultFields f;
  f.kind = kind;
  f.person = std::move(person);
  f.object = std::move(object);
  return f;
}

std::string see_result(const Scene& scene, const std::string& person_name, const std::string& object_name) {
  const auto* person = lookup_person(scene, person_name);
  const auto* object = lookup_object(scene, object_name);
  if (!person || !object) {
    return render_result("can_person_see_object", fields(ResultKind::technical_problem, person_name, object_name));
  }
  Visibility v;
  try {
    v = can_see(scene, person->name, object->name);
  } catch (const PreconditionError&) {
    v.visible = true;  // the person is holding it
  }
  if (v.visible) return render_result("can_person_see_object", fields(ResultKind::positive, person_name, object_name));
  auto f = fields(ResultKind::negative, person_name, object_name);
  f.occluder = v.occluders.front();
  return render_result("can_person_see_object", f);
}

std::string reach_result(const Scene& scene, const std::string& person_name, const std::string& object_name) {
  const auto* person = lookup_person(scene, person_name);
  const auto* object = lookup_object(scene, object_name);
  if (!person || !object) {
    return render_result("can_person_reach_object", fields(ResultKind::technical_problem, person_name, object_name));
  }
  const bool ok = can_reach(scene, person->name, object->name);
  return render_result("can_person_reach_object",
                       fields(ok ? ResultKind::positive : ResultKind::negative, person_name, object_name));
}

std::string busy_result(const Scene& scene, const std::string& person_name, std::string_view function) {
  const auto* person = lookup_person(scene, person_name);
  if (!person) return render_result(function, fields(ResultKind::technical_problem, person_name));
  return render_result(function, fields(person->activity.busy ? ResultKind::negative : ResultKind::positive,
                                        person_name));
}

std::string describe_environment(const Scene& scene) {
  if (scene.persons().empty()) return render_result("get_persons", fields(ResultKind::negative, ""));
  std::vector<std::string> parts;
  for (const auto& person : scene.persons()) {
    parts.push_back(busy_result(scene, person.name, "is_person_busy_or_idle"));
    for (const auto& object : scene.objects()) {
      if (object.held_by == person.name) {
        parts.push_back(person.name + " is holding " + object.name + ".");
        continue;
      }
      parts.push_back(see_result(scene, person.name, object.name));
      parts.push_back(reach_result(scene, person.name, object.name));
    }
  }
  return join(parts, " ");
}

CallOutcome suggestion_failure(std::string message, std::string suggestion) {
  ActionOutcome outcome;
  outcome.success = false;
  outcome.style = FailureStyle::result_suggestion;
  outcome.message = std::move(message);
  outcome.suggestion = std::move(suggestion);
  return {render_failure_with_suggestion(outcome), CallStatus::failed};
}

ParameterSpec param(std::string name, std::string description) {
  ParameterSpec p;
  p.name = std::move(name);
  p.description = std::move(description);
  return p;
}

const std::string kPersonParam = "The name of the person to check. The person must be available in the scene.";
const std::string kObjectParam = "The name of the object to check. The object must be available in the scene.";

std::string quoted_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (const auto& n : names) out += "\"" + n + "\", ";
  return out + "null]";
}

}  // namespace

std::string check_hindering_reasons(const Scene& scene, const std::string& person_name,
                                    const std::string& object_name) {
  // The occlusion sentence has no full stop of its own.
  std::string see = see_result(scene, person_name, object_name);
  if (!see.ends_with('.')) see += '.';
  return see + " " + reach_result(scene, person_name, object_name) + " " +
         busy_result(scene, person_name, "is_person_busy_or_idle");
}

void Registry::add(RegisteredFunction function) {
  if (find(function.spec.name)) throw ConfigError("functions", "duplicate function '" + function.spec.name + "'");
  functions_.push_back(std::move(function));
}

const RegisteredFunction* Registry::find(std::string_view name) const {
  for (const auto& f : functions_) {
    if (f.spec.name == name) return &f;
  }
  return nullptr;
}

bool Registry::enabled(std::string_view name) const {
  const auto* f = find(name);
  return f && f->enabled;
}

void Registry::set_enabled(std::string_view name, bool enabled) {
  for (auto& f : functions_) {
    if (f.spec.name == name || f.alias_of == name) f.enabled = enabled;
  }
}

void Registry::set_description(std::string_view name, std::string description) {
  for (auto& f : functions_) {
    if (f.spec.name == name) f.spec.description = description;
  }
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& f : functions_) out.push_back(f.spec.name);
  return out;
}

std::vector<FunctionSpec> Registry::advertised() const {
  std::vector<FunctionSpec> out;
  for (const auto& f : functions_) {
    if (f.enabled && !f.hidden) out.push_back(f.spec);
  }
  return out;
}

std::optional<FunctionKind> Registry::kind_of(std::string_view name) const {
  const auto* f = find(name);
  if (!f || !f->enabled) return std::nullopt;
  return f->kind;
}

CallOutcome Registry::dispatch(const ToolCall& call) const {
  const auto* f = find(call.function_name);
  if (!f || !f->enabled) return {"Unknown function: " + call.function_name, CallStatus::error};
  const std::string prefix = "Invalid arguments for " + f->spec.name + ": ";

  Arguments args = Arguments::object();
  if (call.arguments.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      args = Arguments::parse(call.arguments);
    } catch (const Arguments::parse_error&) {
      return {prefix + "the arguments are not valid JSON.", CallStatus::error};
    }
  }
  if (!args.is_object()) return {prefix + "expected a JSON object.", CallStatus::error};
  for (const auto& [key, value] : args.items()) {
    if (!f->spec.parameter(key)) return {prefix + "unexpected argument '" + key + "'.", CallStatus::error};
  }
  for (const auto& p : f->spec.parameters) {
    if (!args.contains(p.name) || args.at(p.name).is_null()) {
      if (p.nullable || !p.required) continue;
      return {prefix + "missing argument '" + p.name + "'.", CallStatus::error};
    }
    const auto& v = args.at(p.name);
    const bool type_ok = p.type == "string"    ? v.is_string()
                         : p.type == "number"  ? v.is_number()
                         : p.type == "integer" ? v.is_number_integer()
                         : p.type == "boolean" ? v.is_boolean()
                                               : true;
    if (!type_ok) return {prefix + "argument '" + p.name + "' must be a " + p.type + ".", CallStatus::error};
    if (p.allowed && std::find(p.allowed->begin(), p.allowed->end(), v.get<std::string>()) == p.allowed->end()) {
      std::string allowed = join(*p.allowed, ", ");
      if (p.nullable) allowed += ", null";
      return {"Invalid value '" + v.get<std::string>() + "' for " + p.name + " of " + f->spec.name +
                  ". Allowed values: " + allowed + ".",
              CallStatus::error};
    }
  }
  try {
    return f->handler(args);
  } catch (const Error& e) {
    return {std::string("Error in ") + f->spec.name + ": " + e.what(), CallStatus::error};
  }
}

std::vector<std::string> tier_functions(GranularityTier tier) {
  std::vector<std::string> out = {"get_objects",           "get_persons",          "can_person_reach_object",
                                  "can_person_see_object", "is_person_busy_or_idle", "move_object_to_person",
                                  "put_object_on_object",  "hand_over",            "pour_into",
                                  "speak",                 "robot_facial_expression", "stop"};
  if (tier != GranularityTier::single) out.push_back("check_hindering_reasons");
  if (tier == GranularityTier::aggregate) out.push_back("get_environment_description");
  return out;
}

Registry register_builtin_functions(const BuiltinContext& ctx) {
  if (!ctx.scene) throw PreconditionError("builtin functions need a scene");
  Scene& scene = *ctx.scene;
  Registry r;

  r.add({{"get_objects", "Get the names of all objects that are available in the scene.", {}},
         FunctionKind::query,
         [&scene](const Arguments&) -> CallOutcome {
           ResultFields f;
           for (const auto& o : scene.objects()) f.names.push_back(o.name);
           f.kind = f.names.empty() ? ResultKind::negative : ResultKind::positive;
           return {render_result("get_objects", f)};
         }});

  r.add({{"get_persons", "Get the names of all persons that are available in the scene.", {}},
         FunctionKind::query,
         [&scene](const Arguments&) -> CallOutcome {
           ResultFields f;
           for (const auto& p : scene.persons()) f.names.push_back(p.name);
           f.kind = f.names.empty() ? ResultKind::negative : ResultKind::positive;
           return {render_result("get_persons", f)};
         }});

  r.add({{"can_person_reach_object",
          "Check if the person can reach the object. If the person cannot reach the object, it would be hindered "
          "from helping with the object.",
          {param("person_name", kPersonParam), param("object_name", kObjectParam)}},
         FunctionKind::query,
         [&scene](const Arguments& a) -> CallOutcome {
           return {reach_result(scene, arg_string(a, "person_name"), arg_string(a, "object_name"))};
         }});

  r.add({{"can_person_see_object",
          "Check if the person can see the object. If the person cannot see the object, it would be hindered from "
          "helping with the object.",
          {param("person_name", kPersonParam), param("object_name", kObjectParam)}},
         FunctionKind::query,
         [&scene](const Arguments& a) -> CallOutcome {
           return {see_result(scene, arg_string(a, "person_name"), arg_string(a, "object_name"))};
         }});

  const FunctionSpec busy_spec{
      "is_person_busy_or_idle",
      "Check if the person is busy or idle. If the person is busy, it would be hindered from helping.",
      {param("person_name", kPersonParam)}};
  r.add({busy_spec, FunctionKind::query, [&scene](const Arguments& a) -> CallOutcome {
           return {busy_result(scene, arg_string(a, "person_name"), "is_person_busy_or_idle")};
         }});
  FunctionSpec alias_spec = busy_spec;
  alias_spec.name = "is_person_busy";
  alias_spec.description = "Check if the person is busy.";
  r.add({alias_spec, FunctionKind::query,
         [&scene](const Arguments& a) -> CallOutcome {
           return {busy_result(scene, arg_string(a, "person_name"), "is_person_busy")};
         },
         true, true, "is_person_busy_or_idle"});

  r.add({{"move_object_to_person",
          "You move an object to a person.",
          {param("object_name",
                 "The name of the object to move. The object must be an object that is available in the scene."),
           param("person_name",
                 "The name of the person to move the object to. The person must be available in the scene.")}},
         FunctionKind::action,
         [&scene](const Arguments& a) -> CallOutcome {
           const std::string object_name = arg_string(a, "object_name");
           const std::string person_name = arg_string(a, "person_name");
           ResultFields f = fields(ResultKind::negative, person_name, object_name);
           const auto* object = lookup_object(scene, object_name);
           const auto* person = lookup_person(scene, person_name);
           std::vector<std::string> problems;
           if (!object) problems.push_back(object_name + " is not in the scene");
           if (!person) problems.push_back(person_name + " is not in the scene");
           if (!problems.empty()) {
             f.message = python_list(problems);
             return {render_result("move_object_to_person", f), CallStatus::failed};
           }
           try {
             const auto outcome =
                 apply_action(scene, {ActionKind::move_object_to_person, object->name, person->name});
             if (outcome.success) {
               f.kind = ResultKind::positive;
               return {render_result("move_object_to_person", f)};
             }
             f.message = outcome.message;
           } catch (const AffordanceError& e) {
             f.message = python_list({e.what()});
           }
           return {render_result("move_object_to_person", f), CallStatus::failed};
         }});

  r.add({{"put_object_on_object",
          "You put an object on top of another object that can support it.",
          {param("object_name", "The name of the object to put. The object must be available in the scene."),
           param("target_object_name",
                 "The name of the object to put it on. The object must be available in the scene.")}},
         FunctionKind::action,
         [&scene](const Arguments& a) -> CallOutcome {
           const std::string object_name = arg_string(a, "object_name");
           const std::string target_name = arg_string(a, "target_object_name");
           const std::string message = "Unable to place " + object_name + " on " + target_name + ".";
           const auto* object = lookup_object(scene, object_name);
           const auto* target = lookup_object(scene, target_name);
           if (!object || !target) {
             return suggestion_failure(message, (object ? target_name : object_name) +
                                                    " is not in the scene. Call get_objects to list the objects.");
           }
           try {
             const auto outcome = apply_action(scene, {ActionKind::put_object_on_object, object->name, target->name});
             if (!outcome.success) return {render_failure_with_suggestion(outcome), CallStatus::failed};
           } catch (const AffordanceError& e) {
             return suggestion_failure(message, std::string(e.what()) + ". Choose a different object.");
           }
           ResultFields f = fields(ResultKind::positive, "", object_name);
           f.target = target_name;
           return {render_result("put_object_on_object", f)};
         }});

  r.add({{"hand_over",
          "You hand an object over to a person, who takes it from the robot's hand.",
          {param("object_name", "The name of the object to hand over. The object must be available in the scene."),
           param("person_name",
                 "The name of the person to hand the object to. The person must be available in the scene.")}},
         FunctionKind::action,
         [&scene](const Arguments& a) -> CallOutcome {
           const std::string object_name = arg_string(a, "object_name");
           const std::string person_name = arg_string(a, "person_name");
           const std::string message = "Unable to hand over " + object_name + " to " + person_name + ".";
           const auto* object = lookup_object(scene, object_name);
           const auto* person = lookup_person(scene, person_name);
           if (!object || !person) {
             return suggestion_failure(message, (object ? person_name : object_name) +
                                                    " is not in the scene. Check the names with get_objects and "
                                                    "get_persons.");
           }
           try {
             const auto outcome = apply_action(scene, {ActionKind::hand_over, object->name, person->name});
             if (!outcome.success) return {render_failure_with_suggestion(outcome), CallStatus::failed};
           } catch (const AffordanceError& e) {
             return suggestion_failure(message, std::string(e.what()) + ". Choose a different object.");
           }
           return {render_result("hand_over", fields(ResultKind::positive, person_name, object_name))};
         }});

  r.add({{"pour_into",
          "You pour the content of one container into another container.",
          {param("source_container_name",
                 "The name of the container to pour from. The object must be available in the scene."),
           param("target_container_name",
                 "The name of the container to pour into. The object must be available in the scene.")}},
         FunctionKind::action,
         [&scene](const Arguments& a) -> CallOutcome {
           const std::string source_name = arg_string(a, "source_container_name");
           const std::string target_name = arg_string(a, "target_container_name");
           const std::string message = "Unable to pour " + source_name + " into " + target_name + ".";
           const auto* source = lookup_object(scene, source_name);
           const auto* target = lookup_object(scene, target_name);
           if (!source || !target) {
             return suggestion_failure(message, (source ? target_name : source_name) +
                                                    " is not in the scene. Call get_objects to list the objects.");
           }
           try {
             const auto outcome = apply_action(scene, {ActionKind::pour_into, source->name, target->name});
             if (!outcome.success) return {render_failure_with_suggestion(outcome), CallStatus::failed};
           } catch (const AffordanceError& e) {
             return suggestion_failure(message, std::string(e.what()) + ". Choose a different container.");
           }
           ResultFields f = fields(ResultKind::positive, "", source_name);
           f.target = target_name;
           return {render_result("pour_into", f)};
         }});

  r.add({{"speak",
          "You speak out the given text.",
          {param("person_name",
                 "The name of the person to speak to. The person must be available in the scene. Give \"All\" if "
                 "you want to speak to everyone."),
           param("text", "The text to speak.")}},
         FunctionKind::speak,
         [&scene, on_speak = ctx.on_speak](const Arguments& a) -> CallOutcome {
           const std::string person_name = arg_string(a, "person_name");
           const std::string text = arg_string(a, "text");
           if (person_name != "All" && !lookup_person(scene, person_name)) {
             return {render_result("speak", fields(ResultKind::technical_problem, person_name)), CallStatus::failed};
           }
           if (on_speak) on_speak(person_name, text);
           ResultFields f = fields(ResultKind::positive, person_name);
           f.text = text;
           return {render_result("speak", f)};
         }});

  std::vector<std::string> head_names;
  std::vector<std::string> ears_names;
  if (ctx.catalog) {
    head_names = ctx.catalog->names(ClipKind::head);
    ears_names = ctx.catalog->names(ClipKind::ears_lid);
  } else {
    head_names.assign(kHeadMotions.begin(), kHeadMotions.end());
    ears_names.assign(kRequiredEarsLidClips.begin(), kRequiredEarsLidClips.end());
  }
  ParameterSpec head = param("head_motion", "The name of the animation for head, must be one of the value in the list " +
                                                quoted_list(head_names) + ".");
  head.allowed = head_names;
  head.nullable = true;
  ParameterSpec ears =
      param("ears_lid_motion",
            "The name of the animation for ears and lid, must be one of the value in the list " + quoted_list(ears_names) + ".");
  ears.allowed = ears_names;
  ears.nullable = true;
  ParameterSpec gaze = param("gazed_target",
                             "The name of the object that the robot is looking at, must be an object or a person that "
                             "is available in the scene.");
  gaze.nullable = true;
  r.add({{"robot_facial_expression",
          "Control the motion of the robot's head, gaze, ears and lid for enhancing communication\n"
          "when speak to a person, you need to look at the person.\n"
          "when try to manipulate an object, you need to look at the object or the place to put the object.",
          {head, ears, gaze}},
         FunctionKind::express,
         [&scene, expresser = ctx.expresser](const Arguments& a) -> CallOutcome {
           ExpressionRequest request;
           request.head_motion = arg_optional(a, "head_motion");
           request.ears_lid_motion = arg_optional(a, "ears_lid_motion");
           request.gazed_target = arg_optional(a, "gazed_target");
           if (request.gazed_target && !scene.resolve_entity(*request.gazed_target)) {
             return {"Invalid value '" + *request.gazed_target +
                         "' for gazed_target of robot_facial_expression. It must be an object or a person that is "
                         "available in the scene.",
                     CallStatus::error};
           }
           if (expresser) {
             try {
               expresser->perform(request, scene);
             } catch (const ExpressionError& e) {
               return {std::string("Error in robot_facial_expression: ") + e.what(), CallStatus::error};
             }
           }
           return {render_result("robot_facial_expression", {})};
         }});

  r.add({{"stop", "Call this function to indicate that you are finished.", {}},
         FunctionKind::control,
         [](const Arguments&) -> CallOutcome { return {render_result("stop", {})}; }});

  r.add({{"check_hindering_reasons",
          "Check all reasons that could hinder the person from helping with the object: whether the person can see "
          "the object, whether the person can reach the object, and whether the person is busy.",
          {param("person_name", kPersonParam), param("object_name", kObjectParam)}},
         FunctionKind::query,
         [&scene](const Arguments& a) -> CallOutcome {
           return {check_hindering_reasons(scene, arg_string(a, "person_name"), arg_string(a, "object_name"))};
         }});

  r.add({{"get_environment_description",
          "Describe the whole scene: for every person whether they are busy, and for every object whether they can "
          "see and reach it.",
          {}},
         FunctionKind::query,
         [&scene](const Arguments&) -> CallOutcome { return {describe_environment(scene)}; }});

  // Tier defaults: the aggregate description is off until enabled.
  r.set_enabled("get_environment_description", false);
  return r;
}

}  // namespace lami
