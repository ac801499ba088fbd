#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lami/error.hpp"

namespace lami {

enum class Channel { left_ear, right_ear, lid, pan, tilt };

inline constexpr std::array kAllChannels = {Channel::left_ear, Channel::right_ear, Channel::lid, Channel::pan,
                                            Channel::tilt};
inline constexpr std::size_t kChannelCount = kAllChannels.size();

std::string_view to_string(Channel channel);
std::optional<Channel> channel_from_string(std::string_view name);

class ChannelError : public Error {
 public:
  using Error::Error;
};

struct ChannelLimits {
  double min = -90.0;
  double max = 90.0;
};

using LimitTable = std::array<ChannelLimits, kChannelCount>;

struct Keyframe {
  double time = 0.0;  // seconds from clip start
  std::array<std::optional<double>, kChannelCount> values;  // degrees

  Keyframe& set(Channel c, double degrees) {
    values[static_cast<std::size_t>(c)] = degrees;
    return *this;
  }
  const std::optional<double>& get(Channel c) const { return values[static_cast<std::size_t>(c)]; }

  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

// Ears/lid clips drive left_ear, right_ear and lid. Head clips drive pan and
// tilt as offsets layered on top of the gaze orientation.
enum class ClipKind { ears_lid, head };

struct AnimationClip {
  std::string name;
  std::string description;
  ClipKind kind = ClipKind::ears_lid;
  std::vector<Keyframe> keyframes;

  double duration() const { return keyframes.empty() ? 0.0 : keyframes.back().time; }
  bool has_channel(Channel c) const;

  friend bool operator==(const AnimationClip&, const AnimationClip&) = default;
};

// Throws ConfigError naming the offending keyframe index.
void validate_clip(const AnimationClip& clip, const LimitTable& limits = {});

// Cosine ease-in-out between the channel's neighbouring keyframes, clamped
// to the first/last value outside them. Keyframes that do not set the
// channel are skipped. Throws ChannelError when the clip never sets it.
double sample_clip(const AnimationClip& clip, Channel channel, double t);

inline constexpr std::array<std::string_view, 7> kRequiredEarsLidClips = {
    "confirm", "deny", "listen_to_person", "reset", "observe", "focus", "blink"};
inline constexpr std::array<std::string_view, 3> kHeadMotions = {"shake_head", "nod", "thinking"};

// Named clips the planner may request. Listing order: required names in
// their canonical order, then additional clips in authoring order.
class ClipCatalog {
 public:
  // Validates and stores a clip. Returns a warning when it replaced an
  // existing clip of the same name.
  std::optional<std::string> author_clip(AnimationClip clip, const LimitTable& limits = {});

  const AnimationClip* find(std::string_view name, ClipKind kind) const;
  std::vector<std::string> names(ClipKind kind) const;
  const std::vector<AnimationClip>& clips() const { return clips_; }

  // Throws ConfigError when a required clip is missing or undescribed.
  void validate() const;

  // Name/description block embedded in the system message.
  std::string describe() const;

 private:
  std::vector<AnimationClip> clips_;
};

AnimationClip clip_from_json(const nlohmann::json& node);
nlohmann::json clip_to_json(const AnimationClip& clip);
AnimationClip load_clip(const std::string& path);
// Loads every *.json file under `directory` (recursively, sorted by path).
ClipCatalog load_clip_catalog(const std::string& directory);

}  // namespace lami
