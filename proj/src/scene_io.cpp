#include <fstream>
#include <set>

#include "lami/error.hpp"
#include "lami/scene.hpp"

namespace lami {
namespace {

using json = nlohmann::json;

void check_keys(const json& node, const std::string& at, std::initializer_list<std::string_view> allowed) {
  if (!node.is_object()) throw ConfigError(at, "expected an object");
  for (const auto& [key, value] : node.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(at.empty() ? key : at + "." + key, "unknown field");
    }
  }
}

double number(const json& node, const std::string& at) {
  if (!node.is_number()) throw ConfigError(at, "expected a number");
  return node.get<double>();
}

std::string text(const json& node, const std::string& at) {
  if (!node.is_string()) throw ConfigError(at, "expected a string");
  return node.get<std::string>();
}

std::optional<std::string> optional_text(const json& parent, const char* key, const std::string& at) {
  if (!parent.contains(key) || parent.at(key).is_null()) return std::nullopt;
  return text(parent.at(key), at + "." + key);
}

Vec3 vec3(const json& node, const std::string& at) {
  if (!node.is_array() || node.size() != 3) throw ConfigError(at, "expected [x, y, z]");
  return {number(node[0], at + "[0]"), number(node[1], at + "[1]"), number(node[2], at + "[2]")};
}

Affordance affordance(const std::string& name, const std::string& at) {
  if (name == "container") return Affordance::container;
  if (name == "support") return Affordance::support;
  if (name == "graspable") return Affordance::graspable;
  throw ConfigError(at, "unknown affordance '" + name + "'");
}

SceneObject parse_object(const json& node, const std::string& at) {
  check_keys(node, at,
             {"name", "position", "yaw", "half_extents", "affordances", "content", "fill_level", "held_by",
              "robot_can_grasp", "tilted_toward", "resting_on", "support_capacity"});
  SceneObject o;
  if (!node.contains("name")) throw ConfigError(at + ".name", "missing");
  o.name = text(node.at("name"), at + ".name");
  if (!node.contains("position")) throw ConfigError(at + ".position", "missing");
  o.pose.position = vec3(node.at("position"), at + ".position");
  if (node.contains("yaw")) o.pose.yaw = number(node.at("yaw"), at + ".yaw");
  if (!node.contains("half_extents")) throw ConfigError(at + ".half_extents", "missing");
  o.bounds.half_extents = vec3(node.at("half_extents"), at + ".half_extents");
  o.bounds.center = o.pose.position;
  if (node.contains("affordances")) {
    const auto& list = node.at("affordances");
    if (!list.is_array()) throw ConfigError(at + ".affordances", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string item_at = at + ".affordances[" + std::to_string(i) + "]";
      o.affordances.set(affordance(text(list[i], item_at), item_at));
    }
  }
  o.content = optional_text(node, "content", at);
  if (node.contains("fill_level")) o.fill_level = number(node.at("fill_level"), at + ".fill_level");
  o.held_by = optional_text(node, "held_by", at);
  if (node.contains("robot_can_grasp")) {
    if (!node.at("robot_can_grasp").is_boolean()) throw ConfigError(at + ".robot_can_grasp", "expected a boolean");
    o.robot_can_grasp = node.at("robot_can_grasp").get<bool>();
  }
  o.tilted_toward = optional_text(node, "tilted_toward", at);
  o.resting_on = optional_text(node, "resting_on", at);
  if (node.contains("support_capacity") && !node.at("support_capacity").is_null()) {
    if (!node.at("support_capacity").is_number_integer()) {
      throw ConfigError(at + ".support_capacity", "expected an integer");
    }
    o.support_capacity = node.at("support_capacity").get<int>();
  }
  return o;
}

Person parse_person(const json& node, const std::string& at) {
  check_keys(node, at, {"name", "head_position", "head_yaw", "reach_anchor", "reach_radius", "activity", "holding"});
  Person p;
  if (!node.contains("name")) throw ConfigError(at + ".name", "missing");
  p.name = text(node.at("name"), at + ".name");
  if (!node.contains("head_position")) throw ConfigError(at + ".head_position", "missing");
  p.head_pose.position = vec3(node.at("head_position"), at + ".head_position");
  if (node.contains("head_yaw")) p.head_pose.yaw = number(node.at("head_yaw"), at + ".head_yaw");
  if (!node.contains("reach_anchor")) throw ConfigError(at + ".reach_anchor", "missing");
  p.reach_anchor = vec3(node.at("reach_anchor"), at + ".reach_anchor");
  if (node.contains("reach_radius")) p.reach_radius = number(node.at("reach_radius"), at + ".reach_radius");
  if (node.contains("activity")) {
    const auto& a = node.at("activity");
    check_keys(a, at + ".activity", {"busy", "reason"});
    if (a.contains("busy")) {
      if (!a.at("busy").is_boolean()) throw ConfigError(at + ".activity.busy", "expected a boolean");
      p.activity.busy = a.at("busy").get<bool>();
    }
    p.activity.reason = optional_text(a, "reason", at + ".activity");
  }
  return p;
}

json vec3_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

json optional_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

Scene scene_from_json(const json& doc) {
  check_keys(doc, "", {"description", "objects", "persons", "robot"});
  Scene scene;
  if (doc.contains("robot")) {
    const auto& r = doc.at("robot");
    check_keys(r, "robot", {"head_position", "head_yaw", "reach_radius"});
    if (r.contains("head_position")) scene.robot().head_pose.position = vec3(r.at("head_position"), "robot.head_position");
    if (r.contains("head_yaw")) scene.robot().head_pose.yaw = number(r.at("head_yaw"), "robot.head_yaw");
    if (r.contains("reach_radius")) scene.robot().reach_radius = number(r.at("reach_radius"), "robot.reach_radius");
  }

  // Persons first so held_by can be cross-linked while adding objects.
  std::vector<std::vector<std::string>> declared_holding;
  if (doc.contains("persons")) {
    const auto& list = doc.at("persons");
    if (!list.is_array()) throw ConfigError("persons", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "persons[" + std::to_string(i) + "]";
      Person p = parse_person(list[i], at);
      std::vector<std::string> holding;
      if (list[i].contains("holding")) {
        const auto& h = list[i].at("holding");
        if (!h.is_array()) throw ConfigError(at + ".holding", "expected a list");
        for (std::size_t k = 0; k < h.size(); ++k) {
          holding.push_back(text(h[k], at + ".holding[" + std::to_string(k) + "]"));
        }
      }
      declared_holding.push_back(std::move(holding));
      try {
        scene.add_person(std::move(p));
      } catch (const ConfigError& e) {
        throw ConfigError(at + ".name", e.what());
      }
    }
  }
  if (doc.contains("objects")) {
    const auto& list = doc.at("objects");
    if (!list.is_array()) throw ConfigError("objects", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = "objects[" + std::to_string(i) + "]";
      SceneObject o = parse_object(list[i], at);
      if (o.held_by) {
        Person* holder = scene.find_person(*o.held_by);
        if (!holder) throw ConfigError(at + ".held_by", "unknown person '" + *o.held_by + "'");
        holder->holding.push_back(o.name);
      }
      try {
        scene.add_object(std::move(o));
      } catch (const ConfigError& e) {
        throw ConfigError(at + ".name", e.what());
      }
    }
  }
  for (std::size_t i = 0; i < declared_holding.size(); ++i) {
    const auto& person = scene.persons()[i];
    for (const auto& held : declared_holding[i]) {
      if (std::find(person.holding.begin(), person.holding.end(), held) == person.holding.end()) {
        throw ConfigError("persons[" + std::to_string(i) + "].holding",
                          "'" + held + "' does not name this person in held_by");
      }
    }
  }
  scene.validate();
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("parse error: ") + e.what());
  }
  return scene_from_json(doc);
}

json scene_to_json(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects()) {
    json affordances = json::array();
    if (o.affordances.has(Affordance::container)) affordances.push_back("container");
    if (o.affordances.has(Affordance::support)) affordances.push_back("support");
    if (o.affordances.has(Affordance::graspable)) affordances.push_back("graspable");
    json node = {{"name", o.name},
                 {"position", vec3_json(o.pose.position)},
                 {"yaw", o.pose.yaw},
                 {"half_extents", vec3_json(o.bounds.half_extents)},
                 {"affordances", affordances},
                 {"content", optional_json(o.content)},
                 {"fill_level", o.fill_level},
                 {"held_by", optional_json(o.held_by)},
                 {"robot_can_grasp", o.robot_can_grasp},
                 {"tilted_toward", optional_json(o.tilted_toward)},
                 {"resting_on", optional_json(o.resting_on)}};
    node["support_capacity"] = o.support_capacity ? json(*o.support_capacity) : json(nullptr);
    objects.push_back(std::move(node));
  }
  json persons = json::array();
  for (const auto& p : scene.persons()) {
    persons.push_back({{"name", p.name},
                       {"head_position", vec3_json(p.head_pose.position)},
                       {"head_yaw", p.head_pose.yaw},
                       {"reach_anchor", vec3_json(p.reach_anchor)},
                       {"reach_radius", p.reach_radius},
                       {"activity", {{"busy", p.activity.busy}, {"reason", optional_json(p.activity.reason)}}},
                       {"holding", p.holding}});
  }
  return {{"robot",
           {{"head_position", vec3_json(scene.robot().head_pose.position)},
            {"head_yaw", scene.robot().head_pose.yaw},
            {"reach_radius", scene.robot().reach_radius}}},
          {"objects", objects},
          {"persons", persons}};
}

}  // namespace lami
