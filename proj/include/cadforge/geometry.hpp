#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cadforge {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double length(Vec2 a) { return std::hypot(a.x, a.y); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return a * (1.0 / length(a)); }

/// Axis-aligned box. A default-constructed box is empty (min > max).
struct Aabb {
  Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }

  void expand(Vec3 p) {
    for (int i = 0; i < 3; ++i) {
      min[i] = std::min(min[i], p[i]);
      max[i] = std::max(max[i], p[i]);
    }
  }

  void expand(const Aabb& other) {
    if (other.empty()) return;
    expand(other.min);
    expand(other.max);
  }

  Vec3 extent() const { return empty() ? Vec3{} : max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return empty() ? 0.0 : length(max - min); }

  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }

  bool contains(const Aabb& other) const {
    return other.empty() || (contains(other.min) && contains(other.max));
  }

  Aabb intersected(const Aabb& other) const {
    Aabb out;
    for (int i = 0; i < 3; ++i) {
      out.min[i] = std::max(min[i], other.min[i]);
      out.max[i] = std::min(max[i], other.max[i]);
    }
    return out;
  }

  /// Grow every side by `fraction` of the longest extent.
  Aabb padded(double fraction) const {
    if (empty()) return *this;
    const Vec3 e = extent();
    const double pad = fraction * std::max({e.x, e.y, e.z});
    return {min - Vec3{pad, pad, pad}, max + Vec3{pad, pad, pad}};
  }

  double volume() const {
    if (empty()) return 0.0;
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

/// Sketch coordinate frame. Origin in model units, in-plane axes unit length and orthogonal.
struct Frame {
  Vec3 origin;
  Vec3 x_axis{1.0, 0.0, 0.0};
  Vec3 y_axis{0.0, 1.0, 0.0};

  Vec3 normal() const { return cross(x_axis, y_axis); }

  Vec3 to_world(double u, double v, double w) const {
    return origin + x_axis * u + y_axis * v + normal() * w;
  }

  /// Local (u, v, w) coordinates. Axes are orthonormal, so the inverse is the transpose.
  Vec3 to_local(Vec3 p) const {
    const Vec3 d = p - origin;
    return {dot(d, x_axis), dot(d, y_axis), dot(d, normal())};
  }

  bool is_orthonormal(double tol = 1e-9) const {
    return std::abs(length(x_axis) - 1.0) <= tol && std::abs(length(y_axis) - 1.0) <= tol &&
           std::abs(dot(x_axis, y_axis)) <= tol;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// World-space box of a local box [lo, hi] under `frame`.
inline Aabb transform_box(const Frame& frame, Vec3 lo, Vec3 hi) {
  Aabb box;
  for (int corner = 0; corner < 8; ++corner) {
    const double u = (corner & 1) ? hi.x : lo.x;
    const double v = (corner & 2) ? hi.y : lo.y;
    const double w = (corner & 4) ? hi.z : lo.z;
    box.expand(frame.to_world(u, v, w));
  }
  return box;
}

}  // namespace cadforge
