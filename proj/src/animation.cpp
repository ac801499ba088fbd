#include "lami/animation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace lami {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames = {"left_ear", "right_ear", "lid", "pan",
                                                                        "tilt"};

bool channel_allowed(ClipKind kind, Channel c) {
  const bool head_channel = c == Channel::pan || c == Channel::tilt;
  return kind == ClipKind::head ? head_channel : !head_channel;
}

std::size_t canonical_rank(const AnimationClip& clip) {
  if (clip.kind == ClipKind::ears_lid) {
    auto it = std::find(kRequiredEarsLidClips.begin(), kRequiredEarsLidClips.end(), clip.name);
    if (it != kRequiredEarsLidClips.end()) return static_cast<std::size_t>(it - kRequiredEarsLidClips.begin());
  } else {
    auto it = std::find(kHeadMotions.begin(), kHeadMotions.end(), clip.name);
    if (it != kHeadMotions.end()) return static_cast<std::size_t>(it - kHeadMotions.begin());
  }
  return std::numeric_limits<std::size_t>::max();
}

}  // namespace

std::string_view to_string(Channel channel) { return kChannelNames[static_cast<std::size_t>(channel)]; }

std::optional<Channel> channel_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i) {
    if (kChannelNames[i] == name) return kAllChannels[i];
  }
  return std::nullopt;
}

bool AnimationClip::has_channel(Channel c) const {
  return std::any_of(keyframes.begin(), keyframes.end(), [c](const Keyframe& k) { return k.get(c).has_value(); });
}

void validate_clip(const AnimationClip& clip, const LimitTable& limits) {
  const std::string at = "clip '" + clip.name + "'";
  if (clip.name.empty()) throw ConfigError("name", "clip name must not be empty");
  if (clip.keyframes.empty()) throw ConfigError(at + ".keyframes", "at least one keyframe is required");
  for (std::size_t i = 0; i < clip.keyframes.size(); ++i) {
    const auto& k = clip.keyframes[i];
    const std::string kat = at + ".keyframes[" + std::to_string(i) + "]";
    if (!std::isfinite(k.time) || k.time < 0) throw ConfigError(kat + ".time", "must be a finite time >= 0");
    if (i == 0 && k.time != 0.0) throw ConfigError(kat + ".time", "first keyframe must be at time 0");
    if (i > 0 && !(k.time > clip.keyframes[i - 1].time)) {
      throw ConfigError(kat + ".time", "keyframe times must be strictly increasing");
    }
    bool any = false;
    for (auto c : kAllChannels) {
      const auto& v = k.get(c);
      if (!v) continue;
      any = true;
      if (!channel_allowed(clip.kind, c)) {
        throw ConfigError(kat + "." + std::string(to_string(c)), "channel not driven by this clip kind");
      }
      const auto& lim = limits[static_cast<std::size_t>(c)];
      if (!std::isfinite(*v) || *v < lim.min || *v > lim.max) {
        throw ConfigError(kat + "." + std::string(to_string(c)), "angle outside channel limits");
      }
    }
    if (!any) throw ConfigError(kat, "keyframe sets no channel");
  }
  for (auto c : kAllChannels) {
    if (clip.has_channel(c) && !clip.keyframes.front().get(c)) {
      throw ConfigError(at + ".keyframes[0]." + std::string(to_string(c)), "channel used later needs a value at time 0");
    }
  }
}

double sample_clip(const AnimationClip& clip, Channel channel, double t) {
  const Keyframe* before = nullptr;
  const Keyframe* after = nullptr;
  for (const auto& k : clip.keyframes) {
    if (!k.get(channel)) continue;
    if (k.time <= t) {
      before = &k;
    } else {
      after = &k;
      break;
    }
  }
  if (!before && !after) {
    throw ChannelError("clip '" + clip.name + "' does not drive channel " + std::string(to_string(channel)));
  }
  if (!after) return *before->get(channel);
  if (!before) return *after->get(channel);
  const double v0 = *before->get(channel);
  const double v1 = *after->get(channel);
  const double tau = (t - before->time) / (after->time - before->time);
  return v0 + (v1 - v0) * (1.0 - std::cos(std::numbers::pi * tau)) / 2.0;
}

std::optional<std::string> ClipCatalog::author_clip(AnimationClip clip, const LimitTable& limits) {
  validate_clip(clip, limits);
  for (auto& existing : clips_) {
    if (existing.name == clip.name && existing.kind == clip.kind) {
      existing = std::move(clip);
      return "clip '" + existing.name + "' replaced an existing clip";
    }
  }
  clips_.push_back(std::move(clip));
  std::stable_sort(clips_.begin(), clips_.end(), [](const AnimationClip& a, const AnimationClip& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return canonical_rank(a) < canonical_rank(b);
  });
  return std::nullopt;
}

const AnimationClip* ClipCatalog::find(std::string_view name, ClipKind kind) const {
  for (const auto& clip : clips_) {
    if (clip.name == name && clip.kind == kind) return &clip;
  }
  return nullptr;
}

std::vector<std::string> ClipCatalog::names(ClipKind kind) const {
  std::vector<std::string> out;
  for (const auto& clip : clips_) {
    if (clip.kind == kind) out.push_back(clip.name);
  }
  return out;
}

void ClipCatalog::validate() const {
  for (auto name : kRequiredEarsLidClips) {
    if (!find(name, ClipKind::ears_lid)) throw ConfigError("clips", "missing required clip '" + std::string(name) + "'");
  }
  for (auto name : kHeadMotions) {
    if (!find(name, ClipKind::head)) throw ConfigError("clips", "missing head motion '" + std::string(name) + "'");
  }
  for (const auto& clip : clips_) {
    if (clip.description.empty()) throw ConfigError("clips." + clip.name + ".description", "must not be empty");
  }
}

std::string ClipCatalog::describe() const {
  std::string out = "Available head_motion animations:";
  for (const auto& clip : clips_) {
    if (clip.kind == ClipKind::head) out += "\n'" + clip.name + "': " + clip.description;
  }
  out += "\nAvailable ears_lid_motion animations:";
  for (const auto& clip : clips_) {
    if (clip.kind == ClipKind::ears_lid) out += "\n'" + clip.name + "': " + clip.description;
  }
  return out;
}

AnimationClip clip_from_json(const nlohmann::json& node) {
  if (!node.is_object()) throw ConfigError("", "clip must be an object");
  AnimationClip clip;
  if (!node.contains("name") || !node.at("name").is_string()) throw ConfigError("name", "missing");
  clip.name = node.at("name").get<std::string>();
  clip.description = node.value("description", "");
  const std::string kind = node.value("kind", "ears_lid");
  if (kind == "ears_lid") {
    clip.kind = ClipKind::ears_lid;
  } else if (kind == "head") {
    clip.kind = ClipKind::head;
  } else {
    throw ConfigError("kind", "expected 'ears_lid' or 'head'");
  }
  if (!node.contains("keyframes") || !node.at("keyframes").is_array()) {
    throw ConfigError("keyframes", "expected a list");
  }
  const auto& frames = node.at("keyframes");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string at = "keyframes[" + std::to_string(i) + "]";
    const auto& f = frames[i];
    if (!f.is_object()) throw ConfigError(at, "expected an object");
    Keyframe k;
    for (const auto& [key, value] : f.items()) {
      if (key == "time") {
        if (!value.is_number()) throw ConfigError(at + ".time", "expected a number");
        k.time = value.get<double>();
        continue;
      }
      auto channel = channel_from_string(key);
      if (!channel) throw ConfigError(at + "." + key, "unknown channel");
      if (!value.is_number()) throw ConfigError(at + "." + key, "expected degrees");
      k.set(*channel, value.get<double>());
    }
    if (!f.contains("time")) throw ConfigError(at + ".time", "missing");
    clip.keyframes.push_back(k);
  }
  return clip;
}

nlohmann::json clip_to_json(const AnimationClip& clip) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& k : clip.keyframes) {
    nlohmann::json f = {{"time", k.time}};
    for (auto c : kAllChannels) {
      if (k.get(c)) f[std::string(to_string(c))] = *k.get(c);
    }
    frames.push_back(std::move(f));
  }
  return {{"name", clip.name},
          {"description", clip.description},
          {"kind", clip.kind == ClipKind::head ? "head" : "ears_lid"},
          {"keyframes", frames}};
}

AnimationClip load_clip(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open clip file");
  try {
    return clip_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("parse error: ") + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + e.path(), e.message());
  }
}

ClipCatalog load_clip_catalog(const std::string& directory) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) throw ConfigError(directory, "clip directory does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ClipCatalog catalog;
  for (const auto& file : files) {
    try {
      catalog.author_clip(load_clip(file.string()));
    } catch (const ConfigError& e) {
      if (e.path().starts_with(file.string())) throw;
      throw ConfigError(file.string() + ":" + e.path(), e.message());
    }
  }
  return catalog;
}

}  // namespace lami
