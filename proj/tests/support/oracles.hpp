#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them call into the code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lami/animation.hpp"
#include "lami/scene.hpp"

namespace lami::testing {

inline std::string asset(const std::string& relative) { return std::string(LAMI_ASSET_DIR) + "/" + relative; }
inline std::string fixture_path(const std::string& name) { return std::string(LAMI_FIXTURE_DIR) + "/" + name; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 engine_;
};

// Distance from a point to a box, by summing squared per-axis excess.
inline double box_distance_oracle(Vec3 p, Vec3 center, Vec3 half) {
  auto excess = [](double v, double c, double h) { return std::max(0.0, std::abs(v - c) - h); };
  const double ex = excess(p.x, center.x, half.x);
  const double ey = excess(p.y, center.y, half.y);
  const double ez = excess(p.z, center.z, half.z);
  return std::sqrt(ex * ex + ey * ey + ez * ez);
}

// v0 + (v1 - v0) * sin^2(pi * tau / 2) evaluated in long double; equal to
// the cosine ease-in-out but computed through a different identity.
inline long double ease_oracle(long double v0, long double v1, long double tau) {
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double s = std::sin(pi * tau / 2.0L);
  return v0 + (v1 - v0) * s * s;
}

// Pan/tilt (degrees) that aim a head at `yaw` toward `target`, via a frame
// rotation rather than an angle difference.
inline std::pair<double, double> look_at_oracle(Vec3 head, double yaw, Vec3 target) {
  const double dx = target.x - head.x;
  const double dy = target.y - head.y;
  const double dz = target.z - head.z;
  const double local_x = std::cos(yaw) * dx + std::sin(yaw) * dy;
  const double local_y = -std::sin(yaw) * dx + std::cos(yaw) * dy;
  const double pan = std::atan2(local_y, local_x) * 180.0 / 3.14159265358979323846;
  const double tilt = std::asin(dz / std::sqrt(dx * dx + dy * dy + dz * dz)) * 180.0 / 3.14159265358979323846;
  return {pan, tilt};
}

struct SampledOcclusion {
  std::set<std::string> occluders;  // objects with a sample strictly inside
  std::set<std::string> ambiguous;  // within the tolerance band but never strictly inside
  std::vector<std::string> ordered; // occluders by first sample index, then name
};

// Walks the eye→target-center segment in `step` metre increments and tests
// every sample against each candidate box. A box counts when some sample is
// inside it shrunk by `band`; boxes only touched when grown by one step
// (so the 1 mm sampling cannot decide them) are reported as ambiguous.
inline SampledOcclusion sample_occlusion(const Scene& scene, const std::string& person_name,
                                         const std::string& object_name, double step = 1e-3, double band = 1e-6) {
  const Person& person = *scene.find_person(person_name);
  const SceneObject& target = *scene.find_object(object_name);
  const Vec3 a = person.head_pose.position;
  const Vec3 b = target.bounds.center;
  const double length = distance(a, b);
  const auto samples = static_cast<std::size_t>(std::ceil(length / step));

  SampledOcclusion out;
  std::vector<std::pair<std::size_t, std::string>> first_hit;
  for (const auto& other : scene.objects()) {
    if (other.name == target.name || other.held_by == person.name) continue;
    const Vec3 c = other.bounds.center;
    const Vec3 h = other.bounds.half_extents;
    auto inside = [&](Vec3 p, double grow) {
      return std::abs(p.x - c.x) < h.x + grow && std::abs(p.y - c.y) < h.y + grow && std::abs(p.z - c.z) < h.z + grow;
    };
    std::optional<std::size_t> hit;
    bool near = false;
    // Interior samples only: the sight line is open at both ends.
    for (std::size_t k = 1; k < samples; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(samples);
      const Vec3 p{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t};
      if (inside(p, -band)) {
        hit = k;
        break;
      }
      if (inside(p, step)) near = true;
    }
    if (hit) {
      out.occluders.insert(other.name);
      first_hit.emplace_back(*hit, other.name);
    } else if (near) {
      out.ambiguous.insert(other.name);
    }
  }
  std::sort(first_hit.begin(), first_hit.end());
  for (auto& [k, name] : first_hit) out.ordered.push_back(name);
  return out;
}

// Random tabletop: one person, one target, up to `max_objects` objects in
// total. About half of the extra boxes are dropped onto the sight line so
// occlusion is common.
inline Scene random_occlusion_scene(Rng& rng, int max_objects = 8) {
  Scene scene;
  Person person;
  person.name = "P";
  person.head_pose.position = {rng.uniform(-0.8, 0.8), rng.uniform(-1.0, -0.6), rng.uniform(1.0, 1.4)};
  person.reach_anchor = person.head_pose.position;
  scene.add_person(person);

  SceneObject target;
  target.name = "target";
  target.pose.position = {rng.uniform(-0.6, 0.6), rng.uniform(0.0, 0.6), rng.uniform(0.76, 1.0)};
  target.bounds = {target.pose.position, {rng.uniform(0.02, 0.08), rng.uniform(0.02, 0.08), rng.uniform(0.02, 0.12)}};
  scene.add_object(target);

  const int extra = rng.integer(0, max_objects - 1);
  for (int i = 0; i < extra; ++i) {
    SceneObject o;
    o.name = "box" + std::to_string(i);
    Vec3 c;
    if (rng.chance(0.5)) {
      const double t = rng.uniform(0.1, 0.9);
      const Vec3 a = person.head_pose.position;
      const Vec3 b = target.pose.position;
      c = {a.x + (b.x - a.x) * t + rng.uniform(-0.08, 0.08), a.y + (b.y - a.y) * t + rng.uniform(-0.08, 0.08),
           a.z + (b.z - a.z) * t + rng.uniform(-0.08, 0.08)};
    } else {
      c = {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.6), rng.uniform(0.75, 1.2)};
    }
    o.pose.position = c;
    o.bounds = {c, {rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15), rng.uniform(0.01, 0.15)}};
    scene.add_object(o);
  }
  return scene;
}

// Random valid clip on one channel: strictly increasing times from 0 and
// values that differ between neighbours by at least `min_step` degrees.
inline AnimationClip random_clip(Rng& rng, Channel channel, int keyframes, double min_step = 1.0) {
  AnimationClip clip;
  clip.name = "random";
  clip.description = "generated";
  clip.kind = (channel == Channel::pan || channel == Channel::tilt) ? ClipKind::head : ClipKind::ears_lid;
  double t = 0.0;
  double v = rng.uniform(-60.0, 60.0);
  for (int i = 0; i < keyframes; ++i) {
    Keyframe k;
    k.time = t;
    k.set(channel, v);
    clip.keyframes.push_back(k);
    t += rng.uniform(0.05, 1.5);
    double next = v;
    while (std::abs(next - v) < min_step) next = rng.uniform(-80.0, 80.0);
    v = next;
  }
  return clip;
}

}  // namespace lami::testing
