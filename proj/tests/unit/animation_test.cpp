#include <gtest/gtest.h>

#include "lami/animation.hpp"
#include "lami/error.hpp"
#include "oracles.hpp"

namespace lami {
namespace {

AnimationClip ramp(double v0, double v1, double duration = 1.0) {
  AnimationClip clip;
  clip.name = "ramp";
  clip.description = "test ramp";
  clip.keyframes.push_back(Keyframe{0.0}.set(Channel::left_ear, v0));
  clip.keyframes.push_back(Keyframe{duration}.set(Channel::left_ear, v1));
  return clip;
}

TEST(SampleClip, KeyframeTimesReturnKeyframeValuesExactly) {
  const AnimationClip clip = ramp(-12.5, 30.25, 0.7);
  EXPECT_EQ(sample_clip(clip, Channel::left_ear, 0.0), -12.5);
  EXPECT_EQ(sample_clip(clip, Channel::left_ear, 0.7), 30.25);
}

TEST(SampleClip, MidpointIsTheMean) {
  EXPECT_NEAR(sample_clip(ramp(0, 30), Channel::left_ear, 0.5), 15.0, 1e-12);
}

TEST(SampleClip, QuarterPointMatchesHighPrecisionOracle) {
  const long double oracle = testing::ease_oracle(0.0L, 30.0L, 0.25L);
  EXPECT_NEAR(static_cast<double>(oracle), 4.39340, 1e-4);
  EXPECT_NEAR(sample_clip(ramp(0, 30), Channel::left_ear, 0.25), static_cast<double>(oracle), 1e-12);
}

TEST(SampleClip, ClampsOutsideTheKeyframes) {
  AnimationClip clip = ramp(5, 20);
  clip.keyframes.front().set(Channel::lid, 3);
  clip.keyframes.push_back(Keyframe{2.0}.set(Channel::lid, 9));
  EXPECT_EQ(sample_clip(clip, Channel::left_ear, 1.5), 20);
  EXPECT_EQ(sample_clip(clip, Channel::left_ear, 50.0), 20);
  // Keyframes that skip a channel do not interrupt it.
  EXPECT_NEAR(sample_clip(clip, Channel::lid, 1.0), 6.0, 1e-12);
}

TEST(SampleClip, AbsentChannelIsAChannelError) {
  EXPECT_THROW(sample_clip(ramp(0, 1), Channel::tilt, 0.5), ChannelError);
}

TEST(SampleClip, RandomClipsAgreeWithOracleAndStayMonotone) {
  testing::Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const AnimationClip clip = testing::random_clip(rng, Channel::lid, rng.integer(2, 6));
    for (std::size_t k = 0; k + 1 < clip.keyframes.size(); ++k) {
      const double t0 = clip.keyframes[k].time;
      const double t1 = clip.keyframes[k + 1].time;
      const double v0 = *clip.keyframes[k].get(Channel::lid);
      const double v1 = *clip.keyframes[k + 1].get(Channel::lid);
      double previous = v0;
      for (int s = 1; s <= 20; ++s) {
        const double tau = s / 20.0;
        const double t = t0 + (t1 - t0) * tau;
        const double v = sample_clip(clip, Channel::lid, t);
        ASSERT_NEAR(v, static_cast<double>(testing::ease_oracle(v0, v1, (t - t0) / (t1 - t0))), 1e-9);
        if (v1 > v0) ASSERT_GT(v, previous);
        else ASSERT_LT(v, previous);
        previous = v;
      }
    }
  }
}

TEST(ValidateClip, SingleKeyframeIsAConstantPose) {
  AnimationClip clip;
  clip.name = "still";
  clip.description = "constant";
  clip.keyframes.push_back(Keyframe{0.0}.set(Channel::lid, 10));
  EXPECT_NO_THROW(validate_clip(clip));
  EXPECT_EQ(sample_clip(clip, Channel::lid, 3.0), 10);
}

TEST(ValidateClip, RepeatedTimeNamesTheKeyframe) {
  AnimationClip clip = ramp(0, 10);
  clip.keyframes[0].time = 0.0;
  clip.keyframes.insert(clip.keyframes.begin() + 1, Keyframe{0.5}.set(Channel::left_ear, 3));
  clip.keyframes[2].time = 0.5;
  try {
    validate_clip(clip);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("keyframes[2]"), std::string::npos) << e.what();
  }
}

TEST(ValidateClip, ChannelWithoutTimeZeroValueIsRejected) {
  AnimationClip clip = ramp(0, 10);
  clip.keyframes[1].set(Channel::lid, 20);
  EXPECT_THROW(validate_clip(clip), ConfigError);
}

TEST(ValidateClip, HeadClipsDriveOnlyPanAndTilt) {
  AnimationClip clip = ramp(0, 10);
  clip.kind = ClipKind::head;
  EXPECT_THROW(validate_clip(clip), ConfigError);
}

TEST(ValidateClip, AnglesOutsideLimitsAreRejected) {
  EXPECT_THROW(validate_clip(ramp(0, 95)), ConfigError);
}

TEST(ClipCatalog, ReplacingAClipWarns) {
  ClipCatalog catalog;
  EXPECT_FALSE(catalog.author_clip(ramp(0, 10)).has_value());
  const auto warning = catalog.author_clip(ramp(0, 20));
  ASSERT_TRUE(warning.has_value());
  EXPECT_EQ(catalog.clips().size(), 1u);
  EXPECT_EQ(sample_clip(*catalog.find("ramp", ClipKind::ears_lid), Channel::left_ear, 1.0), 20);
}

TEST(ClipCatalog, ShippedClipsAreComplete) {
  const ClipCatalog catalog = load_clip_catalog(testing::asset("clips"));
  EXPECT_NO_THROW(catalog.validate());
  EXPECT_EQ(catalog.names(ClipKind::ears_lid),
            (std::vector<std::string>{"confirm", "deny", "listen_to_person", "reset", "observe", "focus", "blink"}));
  EXPECT_EQ(catalog.names(ClipKind::head), (std::vector<std::string>{"shake_head", "nod", "thinking"}));
  const std::string described = catalog.describe();
  EXPECT_NE(described.find("'observe': ears roll back, then forward; lid blinks twice"), std::string::npos);
  EXPECT_EQ(described.rfind("Available head_motion animations:", 0), 0u);
}

TEST(ClipCatalog, ObserveLidBlinksTwice) {
  const ClipCatalog catalog = load_clip_catalog(testing::asset("clips"));
  const AnimationClip& observe = *catalog.find("observe", ClipKind::ears_lid);
  int blinks = 0;
  bool closed = false;
  for (double t = 0; t <= observe.duration(); t += 0.01) {
    const bool now_closed = sample_clip(observe, Channel::lid, t) > 25.0;
    if (now_closed && !closed) ++blinks;
    closed = now_closed;
  }
  EXPECT_EQ(blinks, 2);
  // Ears roll back before they come forward.
  EXPECT_LT(sample_clip(observe, Channel::left_ear, 0.4), 0.0);
  EXPECT_GT(sample_clip(observe, Channel::left_ear, 0.8), 0.0);
}

TEST(ClipCatalog, MissingRequiredClipFailsValidation) {
  ClipCatalog catalog;
  catalog.author_clip(ramp(0, 10));
  EXPECT_THROW(catalog.validate(), ConfigError);
}

TEST(ClipJson, RoundTrip) {
  const ClipCatalog catalog = load_clip_catalog(testing::asset("clips"));
  for (const auto& clip : catalog.clips()) EXPECT_EQ(clip_from_json(clip_to_json(clip)), clip);
}

}  // namespace
}  // namespace lami
