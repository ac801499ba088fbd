#include "lami/scene.hpp"

#include <algorithm>
#include <cmath>

#include "lami/error.hpp"

namespace lami {
namespace {

template <typename T>
auto find_by_name(T& items, std::string_view name) -> decltype(&items.front()) {
  auto it = std::find_if(items.begin(), items.end(), [&](const auto& item) { return item.name == name; });
  return it == items.end() ? nullptr : &*it;
}

constexpr std::string_view kArticle = "the_";

std::string python_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += "'" + items[i] + "'";
  }
  return out + "]";
}

ActionOutcome failure(FailureStyle style, std::string message, std::string suggestion,
                      std::vector<std::string> details = {}) {
  ActionOutcome outcome;
  outcome.success = false;
  outcome.style = style;
  outcome.details = std::move(details);
  outcome.message = style == FailureStyle::plain ? python_list(outcome.details) : std::move(message);
  outcome.suggestion = std::move(suggestion);
  return outcome;
}

ActionOutcome success(std::string message) {
  ActionOutcome outcome;
  outcome.success = true;
  outcome.message = std::move(message);
  return outcome;
}

void require_affordance(const SceneObject& object, Affordance a, std::string_view what) {
  if (!object.affordances.has(a)) {
    throw AffordanceError(object.name + " is not " + std::string(what));
  }
}

// Reasons the robot cannot pick up `object`. The grasp flag stands in for a
// failed low-level grasp plan, which reports no reason.
std::vector<std::string> pickup_blockers(const Scene& scene, const SceneObject& object, bool* feasible) {
  std::vector<std::string> reasons;
  *feasible = true;
  if (object.held_by) {
    *feasible = false;
    reasons.push_back(object.name + " is held by " + *object.held_by);
  }
  const auto& robot = scene.robot();
  if (distance(object.bounds.center, robot.head_pose.position) > robot.reach_radius) {
    *feasible = false;
    reasons.push_back(object.name + " is out of reach of " + std::string(kRobotName));
  }
  if (!object.robot_can_grasp) *feasible = false;
  return reasons;
}

// Drop point inside a person's reach zone: halfway along the anchor→robot
// direction in the table plane, keeping the object's height.
Vec3 drop_point_near(const Scene& scene, const Person& person, const SceneObject& object) {
  Vec3 toward = scene.robot().head_pose.position - person.reach_anchor;
  toward.z = 0.0;
  const double len = toward.norm();
  Vec3 p = person.reach_anchor;
  if (len > 0.0) p = p + toward * (0.5 * person.reach_radius / len);
  p.z = object.bounds.center.z;
  return p;
}

ActionOutcome move_to_person(Scene& scene, const ActionCommand& cmd) {
  const auto& object = scene.object(cmd.subject);
  const auto& person = scene.person(cmd.target);
  require_affordance(object, Affordance::graspable, "graspable");
  bool feasible = true;
  auto reasons = pickup_blockers(scene, object, &feasible);
  if (!feasible) {
    return failure(FailureStyle::plain, {}, "Ask a person to pass the object or choose a different object.",
                   std::move(reasons));
  }
  const Vec3 target = drop_point_near(scene, person, object);
  auto& mutable_object = scene.object(cmd.subject);
  mutable_object.set_position(target);
  mutable_object.resting_on.reset();
  mutable_object.tilted_toward.reset();
  return success("You moved " + cmd.subject + " to " + cmd.target + ".");
}

ActionOutcome hand_over(Scene& scene, const ActionCommand& cmd) {
  const auto& object = scene.object(cmd.subject);
  const auto& person = scene.person(cmd.target);
  require_affordance(object, Affordance::graspable, "graspable");
  const std::string message = "Unable to hand over " + cmd.subject + " to " + cmd.target + ".";
  if (person.activity.busy) {
    return failure(FailureStyle::result_suggestion, message,
                   cmd.target + " is busy. Move the object next to " + cmd.target + " instead.");
  }
  bool feasible = true;
  auto reasons = pickup_blockers(scene, object, &feasible);
  if (!feasible) {
    return failure(FailureStyle::result_suggestion, message,
                   "Ask a person to pass the object or choose a different object.", std::move(reasons));
  }
  const Vec3 anchor = person.reach_anchor;
  auto& mutable_object = scene.object(cmd.subject);
  mutable_object.set_position(anchor);
  mutable_object.resting_on.reset();
  scene.set_holder(cmd.subject, cmd.target);
  return success("You handed " + cmd.subject + " over to " + cmd.target + ".");
}

ActionOutcome put_on(Scene& scene, const ActionCommand& cmd) {
  const auto& object = scene.object(cmd.subject);
  const auto& support = scene.object(cmd.target);
  require_affordance(object, Affordance::graspable, "graspable");
  const std::string message = "Unable to place " + cmd.subject + " on " + cmd.target + ".";
  const std::string suggestion = "Hand the object to a person or find a different location to place it.";
  if (cmd.subject == cmd.target) {
    return failure(FailureStyle::result_suggestion, message, suggestion);
  }
  bool feasible = true;
  auto reasons = pickup_blockers(scene, object, &feasible);
  if (!support.affordances.has(Affordance::support)) {
    feasible = false;
    reasons.push_back(cmd.target + " cannot support objects");
  } else if (support.support_capacity) {
    const auto used = std::count_if(scene.objects().begin(), scene.objects().end(), [&](const SceneObject& o) {
      return o.resting_on == cmd.target && o.name != cmd.subject;
    });
    if (used >= *support.support_capacity) {
      feasible = false;
      reasons.push_back(cmd.target + " has no free space");
    }
  }
  if (!feasible) {
    return failure(FailureStyle::result_suggestion, message, suggestion, std::move(reasons));
  }
  Vec3 top = support.bounds.center;
  top.z = support.bounds.center.z + support.bounds.half_extents.z + object.bounds.half_extents.z;
  scene.set_holder(cmd.subject, std::nullopt);
  auto& mutable_object = scene.object(cmd.subject);
  mutable_object.set_position(top);
  mutable_object.resting_on = cmd.target;
  mutable_object.tilted_toward.reset();
  return success("You put " + cmd.subject + " on " + cmd.target + ".");
}

ActionOutcome pour(Scene& scene, const ActionCommand& cmd) {
  const auto& source = scene.object(cmd.subject);
  const auto& destination = scene.object(cmd.target);
  require_affordance(source, Affordance::container, "a container");
  require_affordance(destination, Affordance::container, "a container");
  const std::string message = "Unable to pour " + cmd.subject + " into " + cmd.target + ".";
  if (cmd.subject == cmd.target) {
    return failure(FailureStyle::result_suggestion, message, "Choose a different destination container.");
  }
  bool feasible = true;
  auto reasons = pickup_blockers(scene, source, &feasible);
  // Pouring needs the destination within the robot's reach as well.
  const auto& robot = scene.robot();
  if (distance(destination.bounds.center, robot.head_pose.position) > robot.reach_radius) {
    feasible = false;
    reasons.push_back(cmd.target + " is out of reach of " + std::string(kRobotName));
  }
  if (source.fill_level <= 0.0) {
    feasible = false;
    reasons.push_back(cmd.subject + " is empty");
  }
  if (destination.fill_level >= 1.0) {
    feasible = false;
    reasons.push_back(cmd.target + " is full");
  }
  if (!feasible) {
    return failure(FailureStyle::result_suggestion, message,
                   "Move the source container next to the person instead.", std::move(reasons));
  }
  auto& src = scene.object(cmd.subject);
  auto& dst = scene.object(cmd.target);
  const double transferred = std::min(src.fill_level, 1.0 - dst.fill_level);
  dst.fill_level += transferred;
  src.fill_level -= transferred;
  if (src.content) dst.content = src.content;
  return success("You poured " + cmd.subject + " into " + cmd.target + ".");
}

}  // namespace

const SceneObject* Scene::find_object(std::string_view name) const { return find_by_name(objects_, name); }
SceneObject* Scene::find_object(std::string_view name) { return find_by_name(objects_, name); }
const Person* Scene::find_person(std::string_view name) const { return find_by_name(persons_, name); }
Person* Scene::find_person(std::string_view name) { return find_by_name(persons_, name); }

const SceneObject& Scene::object(std::string_view name) const {
  if (const auto* o = find_object(name)) return *o;
  throw LookupError(std::string(name), "unknown object: " + std::string(name));
}

SceneObject& Scene::object(std::string_view name) {
  if (auto* o = find_object(name)) return *o;
  throw LookupError(std::string(name), "unknown object: " + std::string(name));
}

const Person& Scene::person(std::string_view name) const {
  if (const auto* p = find_person(name)) return *p;
  throw LookupError(std::string(name), "unknown person: " + std::string(name));
}

Person& Scene::person(std::string_view name) {
  if (auto* p = find_person(name)) return *p;
  throw LookupError(std::string(name), "unknown person: " + std::string(name));
}

std::optional<std::string> Scene::resolve_entity(std::string_view name) const {
  if (has_entity(name)) return std::string(name);
  std::string alternative;
  if (name.starts_with(kArticle)) {
    alternative = std::string(name.substr(kArticle.size()));
  } else {
    alternative = std::string(kArticle) + std::string(name);
  }
  if (!alternative.empty() && has_entity(alternative)) return alternative;
  return std::nullopt;
}

void Scene::add_object(SceneObject object) {
  if (has_entity(object.name) || object.name == kRobotName) {
    throw ConfigError("objects", "duplicate name '" + object.name + "'");
  }
  object.bounds.center = object.pose.position;
  objects_.push_back(std::move(object));
}

void Scene::add_person(Person person) {
  if (has_entity(person.name) || person.name == kRobotName) {
    throw ConfigError("persons", "duplicate name '" + person.name + "'");
  }
  persons_.push_back(std::move(person));
}

void Scene::set_holder(std::string_view object_name, std::optional<std::string> person_name) {
  auto& object = this->object(object_name);
  if (person_name) person(*person_name);  // validates the name before mutating
  if (object.held_by) {
    auto& previous = person(*object.held_by).holding;
    std::erase(previous, object.name);
  }
  object.held_by = std::move(person_name);
  if (object.held_by) {
    object.resting_on.reset();
    person(*object.held_by).holding.push_back(object.name);
  }
}

void Scene::set_activity(std::string_view person_name, ActivityState activity) {
  if (activity.reason && !activity.busy) {
    throw PreconditionError("activity reason given for an idle person");
  }
  person(person_name).activity = std::move(activity);
}

void Scene::validate() const {
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    const std::string at = "objects[" + std::to_string(i) + "]";
    if (o.name.empty()) throw ConfigError(at + ".name", "must not be empty");
    if (!o.pose.position.finite()) throw ConfigError(at + ".position", "must be finite");
    if (!(o.pose.yaw >= -std::numbers::pi && o.pose.yaw < std::numbers::pi)) {
      throw ConfigError(at + ".yaw", "must lie in [-pi, pi)");
    }
    const auto& h = o.bounds.half_extents;
    if (!(h.x > 0 && h.y > 0 && h.z > 0) || !h.finite()) {
      throw ConfigError(at + ".half_extents", "must be strictly positive");
    }
    if (!(o.fill_level >= 0.0 && o.fill_level <= 1.0)) {
      throw ConfigError(at + ".fill_level", "must lie in [0, 1]");
    }
    if (o.fill_level > 0.0 && !o.affordances.has(Affordance::container)) {
      throw ConfigError(at + ".fill_level", "only containers can be filled");
    }
    if (o.held_by && !find_person(*o.held_by)) {
      throw ConfigError(at + ".held_by", "unknown person '" + *o.held_by + "'");
    }
    if (o.held_by) {
      const auto& holding = find_person(*o.held_by)->holding;
      if (std::count(holding.begin(), holding.end(), o.name) != 1) {
        throw ConfigError(at + ".held_by", "holder does not list the object");
      }
    }
    if (o.tilted_toward && !find_object(*o.tilted_toward)) {
      throw ConfigError(at + ".tilted_toward", "unknown object '" + *o.tilted_toward + "'");
    }
    if (o.resting_on && !find_object(*o.resting_on)) {
      throw ConfigError(at + ".resting_on", "unknown object '" + *o.resting_on + "'");
    }
    if (o.support_capacity && *o.support_capacity < 0) {
      throw ConfigError(at + ".support_capacity", "must be non-negative");
    }
  }
  for (std::size_t i = 0; i < persons_.size(); ++i) {
    const auto& p = persons_[i];
    const std::string at = "persons[" + std::to_string(i) + "]";
    if (p.name.empty()) throw ConfigError(at + ".name", "must not be empty");
    if (!p.head_pose.position.finite()) throw ConfigError(at + ".head_pose", "must be finite");
    if (!(p.head_pose.yaw >= -std::numbers::pi && p.head_pose.yaw < std::numbers::pi)) {
      throw ConfigError(at + ".head_pose.yaw", "must lie in [-pi, pi)");
    }
    if (!p.reach_anchor.finite()) throw ConfigError(at + ".reach_anchor", "must be finite");
    if (!(p.reach_radius > 0.0) || !std::isfinite(p.reach_radius)) {
      throw ConfigError(at + ".reach_radius", "must be > 0");
    }
    if (p.activity.reason && !p.activity.busy) {
      throw ConfigError(at + ".activity.reason", "reason requires busy = true");
    }
    for (const auto& held : p.holding) {
      const auto* o = find_object(held);
      if (!o || o->held_by != p.name) {
        throw ConfigError(at + ".holding", "'" + held + "' is not held by " + p.name);
      }
    }
  }
  if (!robot_.head_pose.position.finite()) throw ConfigError("robot.head_pose", "must be finite");
  if (!(robot_.reach_radius > 0.0)) throw ConfigError("robot.reach_radius", "must be > 0");
}

bool can_reach(const Scene& scene, std::string_view person_name, std::string_view object_name) {
  const auto& person = scene.person(person_name);
  const auto& object = scene.object(object_name);
  return object.bounds.distance_to(person.reach_anchor) <= person.reach_radius;
}

Visibility can_see(const Scene& scene, std::string_view person_name, std::string_view object_name) {
  const auto& person = scene.person(person_name);
  const auto& target = scene.object(object_name);
  if (target.held_by == person.name) {
    throw PreconditionError(person.name + " is holding " + target.name);
  }
  const Vec3 eye = person.head_pose.position;
  const Vec3 goal = target.bounds.center;

  std::vector<std::pair<double, std::string>> hits;
  for (const auto& other : scene.objects()) {
    if (other.name == target.name || other.held_by == person.name) continue;
    if (auto interval = segment_box_interval(eye, goal, other.bounds)) {
      hits.emplace_back(interval->first, other.name);
    }
  }
  std::sort(hits.begin(), hits.end());  // entry parameter, then name

  Visibility result;
  for (auto& [t, name] : hits) result.occluders.push_back(std::move(name));
  result.visible = result.occluders.empty();
  return result;
}

ActivityState is_busy(const Scene& scene, std::string_view person_name) {
  return scene.person(person_name).activity;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::move_object_to_person: return "move_object_to_person";
    case ActionKind::put_object_on_object: return "put_object_on_object";
    case ActionKind::hand_over: return "hand_over";
    case ActionKind::pour_into: return "pour_into";
  }
  return "unknown";
}

ActionOutcome apply_action(Scene& scene, const ActionCommand& command) {
  switch (command.kind) {
    case ActionKind::move_object_to_person: return move_to_person(scene, command);
    case ActionKind::put_object_on_object: return put_on(scene, command);
    case ActionKind::hand_over: return hand_over(scene, command);
    case ActionKind::pour_into: return pour(scene, command);
  }
  throw PreconditionError("unknown action kind");
}

}  // namespace lami
