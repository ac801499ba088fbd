#include <gtest/gtest.h>

#include <fstream>

#include "lami/error.hpp"
#include "lami/narrator.hpp"
#include "oracles.hpp"

namespace lami {
namespace {

Scene two_people() {
  Scene scene;
  for (const char* name : {"Felix", "Daniel", "Sam"}) {
    Person p;
    p.name = name;
    scene.add_person(p);
  }
  return scene;
}

SceneObject container(std::string name, bool is_container = true) {
  SceneObject o;
  o.name = std::move(name);
  o.bounds.half_extents = {0.05, 0.05, 0.05};
  if (is_container) o.affordances.set(Affordance::container);
  return o;
}

TEST(RenderSpeech, SubstitutesSenderAndReceiver) {
  const Scene scene = two_people();
  EXPECT_EQ(render_speech(scene, {"Felix", "Daniel", "Can you pass me the fanta bottle?"}),
            "Felix said to Daniel: Can you pass me the fanta bottle?");
  EXPECT_EQ(render_speech(scene, {"Felix", "the_robot", "pour me some cola"}),
            "Felix said to the_robot: pour me some cola");
}

TEST(RenderSpeech, RejectsSelfAddressAndStrangers) {
  const Scene scene = two_people();
  EXPECT_THROW(render_speech(scene, {"Felix", "Felix", "hi"}), PreconditionError);
  EXPECT_THROW(render_speech(scene, {"Bob", "Felix", "hi"}), PreconditionError);
}

class PouringTest : public ::testing::Test {
 protected:
  void SetUp() override {
    scene = two_people();
    scene.add_object(container("the_bottle_one"));
    scene.add_object(container("the_glass_two"));
    scene.add_object(container("the_knife", false));
  }
  Scene scene;
};

TEST_F(PouringTest, HeldTiltedContainerIsReported) {
  const Scene before = scene;
  scene.set_holder("the_bottle_one", "Sam");
  scene.object("the_bottle_one").tilted_toward = "the_glass_two";
  const auto event = detect_pouring(before, scene);
  ASSERT_TRUE(event.has_value());
  EXPECT_EQ(event->text, "Sam is pouring the_bottle_one into the_glass_two");
  EXPECT_EQ(event->actor, "Sam");
  // Rising edge only: the same pour does not fire twice.
  EXPECT_FALSE(detect_pouring(scene, scene).has_value());
}

TEST_F(PouringTest, NobodyHoldingMeansNoEvent) {
  const Scene before = scene;
  scene.object("the_bottle_one").tilted_toward = "the_glass_two";
  EXPECT_FALSE(detect_pouring(before, scene).has_value());
}

TEST_F(PouringTest, AffordanceFilterMatchesHandEnumeration) {
  // (source container?, destination) → expected event
  struct Case {
    std::string source;
    std::string destination;
    bool expected;
  };
  const std::vector<Case> cases = {
      {"the_bottle_one", "the_glass_two", true},
      {"the_bottle_one", "the_knife", false},
      {"the_knife", "the_glass_two", false},
      {"the_bottle_one", "the_bottle_one", false},
  };
  for (const auto& c : cases) {
    Scene s = two_people();
    s.add_object(container("the_bottle_one"));
    s.add_object(container("the_glass_two"));
    s.add_object(container("the_knife", false));
    const Scene before = s;
    s.set_holder(c.source, "Sam");
    s.object(c.source).tilted_toward = c.destination;
    EXPECT_EQ(detect_pouring(before, s).has_value(), c.expected) << c.source << " -> " << c.destination;
  }
}

ResultFields fields(ResultKind kind, std::string person = "", std::string object = "") {
  ResultFields f;
  f.kind = kind;
  f.person = std::move(person);
  f.object = std::move(object);
  return f;
}

TEST(RenderResult, AppendixStrings) {
  ResultFields occluded = fields(ResultKind::negative, "Daniel", "the_fanta_bottle");
  occluded.occluder = "lego_box";
  EXPECT_EQ(render_result("can_person_see_object", occluded),
            "Daniel cannot see the_fanta_bottle, it is occluded by lego_box");

  ResultFields said = fields(ResultKind::positive, "Daniel");
  said.text = "The fanta bottle is behind the lego box, you cannot see it from where you are.";
  EXPECT_EQ(render_result("speak", said),
            "You said to Daniel: The fanta bottle is behind the lego box, you cannot see it from where you are.");
  EXPECT_EQ(render_result("robot_facial_expression", fields(ResultKind::positive)),
            "The robot performed facial expressions.");
  EXPECT_EQ(render_result("stop", fields(ResultKind::positive)), "You successfully finished the task.");

  ResultFields failed = fields(ResultKind::negative, "Daniel", "the_fanta_bottle");
  failed.message = "[]";
  EXPECT_EQ(render_result("move_object_to_person", failed), "You were not able to move the_fanta_bottle to Daniel. []");
  EXPECT_EQ(render_result("is_person_busy", fields(ResultKind::positive, "Daniel")), "Daniel is not busy.");
  EXPECT_EQ(render_result("is_person_busy_or_idle", fields(ResultKind::positive, "Daniel")), "Daniel is idle.");
  EXPECT_EQ(render_result("is_person_busy_or_idle", fields(ResultKind::negative, "Daniel")), "Daniel is busy.");
  EXPECT_EQ(render_result("can_person_reach_object", fields(ResultKind::technical_problem, "Daniel", "x")),
            "It could not be determined if Daniel can reach x. There were technical problems.");

  ResultFields objects = fields(ResultKind::positive);
  objects.names = {"the_cola_bottle", "lego_box"};
  EXPECT_EQ(render_result("get_objects", objects), "Following objects were observed: the_cola_bottle, lego_box.");
}

TEST(RenderResult, UnknownFunctionIsAnInternalError) {
  EXPECT_FALSE(has_result_template("fly_to_moon"));
  EXPECT_THROW(render_result("fly_to_moon", fields(ResultKind::positive)), PreconditionError);
}

TEST(RenderResult, ParseRecoversRenderedFields) {
  std::vector<std::pair<std::string, ResultFields>> cases;
  ResultFields see = fields(ResultKind::negative, "Daniel", "the_fanta_bottle");
  see.occluder = "lego_box";
  cases.emplace_back("can_person_see_object", see);
  cases.emplace_back("can_person_reach_object", fields(ResultKind::positive, "Felix", "glass_one"));
  cases.emplace_back("is_person_busy", fields(ResultKind::positive, "Daniel"));
  ResultFields spoken = fields(ResultKind::positive, "Felix");
  spoken.text = "Here is the coke, you can now pass it to Felix.";
  cases.emplace_back("speak", spoken);
  ResultFields failed = fields(ResultKind::negative, "Daniel", "the_lego_box");
  failed.message = "[]";
  cases.emplace_back("move_object_to_person", failed);
  ResultFields listed = fields(ResultKind::positive);
  listed.names = {"Felix", "Daniel"};
  cases.emplace_back("get_persons", listed);
  ResultFields suggestion = fields(ResultKind::negative);
  suggestion.message = "Unable to place the_bottle_two on the_table_one.";
  suggestion.suggestion = "Hand the object to a person or find a different location to place it.";
  cases.emplace_back("put_object_on_object", suggestion);

  for (const auto& [function, f] : cases) {
    const std::string text = render_result(function, f);
    const auto parsed = parse_result(function, text);
    ASSERT_TRUE(parsed.has_value()) << text;
    EXPECT_EQ(*parsed, f) << text;
    EXPECT_EQ(render_result(function, *parsed), text);
    EXPECT_EQ(text.find("<sender>"), std::string::npos);
    EXPECT_EQ(text.find("<receiver>"), std::string::npos);
  }
  EXPECT_FALSE(parse_result("stop", "You failed.").has_value());
}

TEST(RenderResult, EveryFixtureResultParses) {
  // The replay validator relies on this for every shipped golden string.
  for (const char* name : {"appendix_b.json", "reachable_assist.json", "busy_assist.json", "finding_assist.json",
                           "explicit_pour.json", "explicit_fallback.json"}) {
    const auto doc = nlohmann::json::parse(std::ifstream(testing::fixture_path(name)));
    for (const auto& step : doc["rounds"][0]["steps"]) {
      if (!step.contains("tool_calls")) continue;
      for (std::size_t i = 0; i < step["tool_calls"].size(); ++i) {
        const std::string function = step["tool_calls"][i]["name"];
        const std::string text = step["expected_results"][i];
        if (!has_result_template(function)) continue;
        const auto parsed = parse_result(function, text);
        ASSERT_TRUE(parsed.has_value()) << name << ": " << text;
        EXPECT_EQ(render_result(function, *parsed), text);
      }
    }
  }
}

TEST(RenderFailure, ResultSuggestionFormat) {
  ActionOutcome outcome;
  outcome.success = false;
  outcome.message = "Unable to place the_bottle_two on the_table_one.";
  outcome.suggestion = "Hand the object to a person or find a different location to place it.";
  EXPECT_EQ(render_failure_with_suggestion(outcome),
            "RESULT: 'Unable to place the_bottle_two on the_table_one.' SUGGESTION: Hand the object to a person or "
            "find a different location to place it.");
}

TEST(RenderFailure, SuccessIsAContractViolation) {
  ActionOutcome outcome;
  outcome.success = true;
  outcome.message = "You moved the_cola_bottle to Felix.";
  EXPECT_THROW(render_failure_with_suggestion(outcome), PreconditionError);
}

TEST(RenderFailure, PlainMoveFailureKeepsTheEmptyList) {
  Scene scene;
  scene.robot().head_pose.position = {0, 0, 1};
  Person daniel;
  daniel.name = "Daniel";
  scene.add_person(daniel);
  SceneObject fanta = container("the_fanta_bottle");
  fanta.affordances.set(Affordance::graspable);
  fanta.robot_can_grasp = false;
  fanta.pose.position = fanta.bounds.center = {0, 0.2, 0.9};
  scene.add_object(fanta);
  const auto outcome = apply_action(scene, {ActionKind::move_object_to_person, "the_fanta_bottle", "Daniel"});
  ResultFields f = fields(ResultKind::negative, "Daniel", "the_fanta_bottle");
  f.message = outcome.message;
  EXPECT_EQ(render_result("move_object_to_person", f), "You were not able to move the_fanta_bottle to Daniel. []");
}

}  // namespace
}  // namespace lami
