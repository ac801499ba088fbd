#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/geometry.hpp"

namespace lami {

inline constexpr std::string_view kRobotName = "the_robot";

enum class Affordance : std::uint8_t { container = 1, support = 2, graspable = 4 };

class Affordances {
 public:
  Affordances() = default;
  Affordances(std::initializer_list<Affordance> list) {
    for (auto a : list) set(a);
  }

  bool has(Affordance a) const { return (bits_ & static_cast<std::uint8_t>(a)) != 0; }
  void set(Affordance a) { bits_ |= static_cast<std::uint8_t>(a); }

  friend bool operator==(const Affordances&, const Affordances&) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ActivityState {
  bool busy = false;
  std::optional<std::string> reason;  // only when busy

  friend bool operator==(const ActivityState&, const ActivityState&) = default;
};

struct SceneObject {
  std::string name;
  Pose pose;
  Aabb bounds;  // bounds.center tracks pose.position
  Affordances affordances;
  std::optional<std::string> content;
  double fill_level = 0.0;
  std::optional<std::string> held_by;
  bool robot_can_grasp = true;
  // Container this object is being tilted toward; drives pouring detection.
  std::optional<std::string> tilted_toward;
  // Support this object rests on, and how many objects a support accepts.
  std::optional<std::string> resting_on;
  std::optional<int> support_capacity;

  void set_position(Vec3 p) {
    pose.position = p;
    bounds.center = p;
  }

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct Person {
  std::string name;
  Pose head_pose;
  Vec3 reach_anchor;
  double reach_radius = 0.8;
  ActivityState activity;
  std::vector<std::string> holding;

  friend bool operator==(const Person&, const Person&) = default;
};

struct RobotState {
  Pose head_pose;
  double reach_radius = 0.9;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

// Authoritative tabletop world state. Objects and persons keep the order in
// which they were declared; listings ("Following objects were observed")
// follow that order.
class Scene {
 public:
  Scene() = default;

  const std::vector<SceneObject>& objects() const { return objects_; }
  const std::vector<Person>& persons() const { return persons_; }
  const RobotState& robot() const { return robot_; }
  RobotState& robot() { return robot_; }

  const SceneObject* find_object(std::string_view name) const;
  SceneObject* find_object(std::string_view name);
  const Person* find_person(std::string_view name) const;
  Person* find_person(std::string_view name);

  // Throwing lookups; LookupError carries the unresolved name.
  const SceneObject& object(std::string_view name) const;
  SceneObject& object(std::string_view name);
  const Person& person(std::string_view name) const;
  Person& person(std::string_view name);

  bool has_entity(std::string_view name) const { return find_object(name) || find_person(name); }

  // Resolves a loosely written entity name: exact match first, then the same
  // name with the "the_" article added or removed. Returns nullopt when
  // nothing (or more than one candidate) matches.
  std::optional<std::string> resolve_entity(std::string_view name) const;

  // Adds an entity; throws ConfigError on duplicate names.
  void add_object(SceneObject object);
  void add_person(Person person);

  // Mutations used by the operator protocol and the action executor. Each
  // keeps held_by/holding consistent.
  void set_holder(std::string_view object_name, std::optional<std::string> person_name);
  void set_activity(std::string_view person_name, ActivityState activity);

  // Throws ConfigError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  std::vector<SceneObject> objects_;
  std::vector<Person> persons_;
  RobotState robot_;
};

struct Visibility {
  bool visible = true;
  std::vector<std::string> occluders;  // nearest first
};

bool can_reach(const Scene& scene, std::string_view person_name, std::string_view object_name);
Visibility can_see(const Scene& scene, std::string_view person_name, std::string_view object_name);
ActivityState is_busy(const Scene& scene, std::string_view person_name);

enum class ActionKind { move_object_to_person, put_object_on_object, hand_over, pour_into };

std::string_view to_string(ActionKind kind);

struct ActionCommand {
  ActionKind kind;
  std::string subject;  // object moved, or pour source
  std::string target;   // person, support, or pour destination
};

// How a failed action is phrased back to the planner: with the plain
// "You were not able to ..." template, or with RESULT/SUGGESTION.
enum class FailureStyle { plain, result_suggestion };

struct ActionOutcome {
  bool success = false;
  std::string message;
  std::optional<std::string> suggestion;  // absent on success
  FailureStyle style = FailureStyle::result_suggestion;
  // Reasons reported by the executor; rendered as a list for plain failures.
  std::vector<std::string> details;
};

// Feasibility-gated execution. On failure the scene is left untouched.
// Throws LookupError / AffordanceError on precondition violations.
ActionOutcome apply_action(Scene& scene, const ActionCommand& command);

Scene scene_from_json(const nlohmann::json& doc);
Scene load_scene(const std::string& path);
nlohmann::json scene_to_json(const Scene& scene);

}  // namespace lami
