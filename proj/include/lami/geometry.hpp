#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace lami {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// Position plus heading in the table plane. Roll and pitch are not modeled.
struct Pose {
  Vec3 position;
  double yaw = 0.0;  // radians, [-pi, pi)

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Wraps an angle in radians into [-pi, pi).
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

struct Aabb {
  Vec3 center;
  Vec3 half_extents;

  friend bool operator==(const Aabb&, const Aabb&) = default;

  Vec3 min() const { return center - half_extents; }
  Vec3 max() const { return center + half_extents; }

  bool contains(Vec3 p) const {
    return std::abs(p.x - center.x) <= half_extents.x && std::abs(p.y - center.y) <= half_extents.y &&
           std::abs(p.z - center.z) <= half_extents.z;
  }

  Vec3 closest_point(Vec3 p) const {
    const Vec3 lo = min();
    const Vec3 hi = max();
    return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
  }

  double distance_to(Vec3 p) const { return distance(p, closest_point(p)); }
};

// Parameter interval [enter, exit] ⊂ [0, 1] over which the segment a→b lies
// inside the box (slab method). Returns nullopt when the clipped interval has
// zero length, so tangential contact does not count as an intersection.
inline std::optional<std::pair<double, double>> segment_box_interval(Vec3 a, Vec3 b, const Aabb& box) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double origin[3] = {a.x, a.y, a.z};
  const double dir[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double lo[3] = {box.center.x - box.half_extents.x, box.center.y - box.half_extents.y,
                        box.center.z - box.half_extents.z};
  const double hi[3] = {box.center.x + box.half_extents.x, box.center.y + box.half_extents.y,
                        box.center.z + box.half_extents.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (dir[axis] == 0.0) {
      if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double near_t = (lo[axis] - origin[axis]) / dir[axis];
    double far_t = (hi[axis] - origin[axis]) / dir[axis];
    if (near_t > far_t) std::swap(near_t, far_t);
    t0 = std::max(t0, near_t);
    t1 = std::min(t1, far_t);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

constexpr double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
constexpr double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace lami
