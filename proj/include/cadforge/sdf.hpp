#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <variant>
#include <vector>

#include "cadforge/geometry.hpp"

namespace cadforge {

// 2D profiles, centered on the sketch origin unless given explicit vertices.

struct RectProfile {
  double width = 0;
  double height = 0;
};

struct CircleProfile {
  double radius = 0;
};

struct PolygonProfile {
  std::vector<Vec2> vertices;  // simple, either orientation
};

using Profile = std::variant<RectProfile, CircleProfile, PolygonProfile>;

inline double sdf_rect(Vec2 p, double hw, double hh) {
  const double dx = std::abs(p.x) - hw;
  const double dy = std::abs(p.y) - hh;
  const double ox = std::max(dx, 0.0);
  const double oy = std::max(dy, 0.0);
  return std::hypot(ox, oy) + std::min(std::max(dx, dy), 0.0);
}

/// Exact signed distance to a simple polygon (winding-parity sign).
inline double sdf_polygon(Vec2 p, const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  double d = dot(p - v[0], p - v[0]);
  double s = 1.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i, ++i) {
    const Vec2 e = v[j] - v[i];
    const Vec2 w = p - v[i];
    const double t = std::clamp(dot(w, e) / dot(e, e), 0.0, 1.0);
    const Vec2 b = w - e * t;
    d = std::min(d, dot(b, b));
    const bool c1 = p.y >= v[i].y;
    const bool c2 = p.y < v[j].y;
    const bool c3 = e.x * w.y > e.y * w.x;
    if ((c1 && c2 && c3) || (!c1 && !c2 && !c3)) s = -s;
  }
  return s * std::sqrt(d);
}

inline double profile_sdf(const Profile& profile, Vec2 p) {
  if (const auto* r = std::get_if<RectProfile>(&profile)) return sdf_rect(p, 0.5 * r->width, 0.5 * r->height);
  if (const auto* c = std::get_if<CircleProfile>(&profile)) return length(p) - c->radius;
  return sdf_polygon(p, std::get<PolygonProfile>(profile).vertices);
}

/// Local 2D bounds [lo, hi] of a profile.
inline std::pair<Vec2, Vec2> profile_bounds(const Profile& profile) {
  if (const auto* r = std::get_if<RectProfile>(&profile))
    return {{-0.5 * r->width, -0.5 * r->height}, {0.5 * r->width, 0.5 * r->height}};
  if (const auto* c = std::get_if<CircleProfile>(&profile))
    return {{-c->radius, -c->radius}, {c->radius, c->radius}};
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-lo.x, -lo.y};
  for (const Vec2& q : std::get<PolygonProfile>(profile).vertices) {
    lo = {std::min(lo.x, q.x), std::min(lo.y, q.y)};
    hi = {std::max(hi.x, q.x), std::max(hi.y, q.y)};
  }
  return {lo, hi};
}

/// Vertices of a regular polygon with its first vertex on the +u axis.
inline std::vector<Vec2> regular_polygon(int sides, double circumradius) {
  std::vector<Vec2> v;
  v.reserve(static_cast<std::size_t>(sides));
  for (int k = 0; k < sides; ++k) {
    const double a = 2.0 * std::numbers::pi * k / sides;
    v.push_back({circumradius * std::cos(a), circumradius * std::sin(a)});
  }
  return v;
}

// 3D primitives.

/// Profile swept along the frame normal over local w in [0, depth]. A positive chamfer
/// bevels the top-face boundary at 45 degrees with the given leg length.
struct Prism {
  Frame frame;
  Profile profile;
  double depth = 0;
  double chamfer = 0;
};

/// Cylinder along the frame normal over local w in [w_min, w_max]; infinite when `through`.
struct Cylinder {
  Frame frame;
  Vec2 center;
  double radius = 0;
  double w_min = 0;
  double w_max = 0;
  bool through = false;
};

struct Sphere {
  Vec3 center;
  double radius = 0;
};

using Primitive = std::variant<Prism, Cylinder, Sphere>;

/// Intersection of two fields with a 45-degree bevel of leg `leg` along their shared edge.
inline double chamfered_intersection(double a, double b, double leg) {
  return std::max(std::max(a, b), (a + b + leg) * std::numbers::sqrt2 * 0.5);
}

inline double primitive_sdf(const Primitive& prim, Vec3 p) {
  if (const auto* pr = std::get_if<Prism>(&prim)) {
    const Vec3 l = pr->frame.to_local(p);
    const double side = profile_sdf(pr->profile, {l.x, l.y});
    const double top = l.z - pr->depth;
    const double bottom = -l.z;
    if (pr->chamfer > 0.0) return std::max(chamfered_intersection(side, top, pr->chamfer), bottom);
    // Exact extrusion distance.
    const double slab = std::max(top, bottom);
    const double ox = std::max(side, 0.0);
    const double oy = std::max(slab, 0.0);
    return std::min(std::max(side, slab), 0.0) + std::hypot(ox, oy);
  }
  if (const auto* cy = std::get_if<Cylinder>(&prim)) {
    const Vec3 l = cy->frame.to_local(p);
    const double radial = std::hypot(l.x - cy->center.x, l.y - cy->center.y) - cy->radius;
    if (cy->through) return radial;
    const double slab = std::max(l.z - cy->w_max, cy->w_min - l.z);
    const double ox = std::max(radial, 0.0);
    const double oy = std::max(slab, 0.0);
    return std::min(std::max(radial, slab), 0.0) + std::hypot(ox, oy);
  }
  const auto& sp = std::get<Sphere>(prim);
  return length(p - sp.center) - sp.radius;
}

/// Conservative world bounds; through-cylinders are bounded by `clip`.
inline Aabb primitive_bounds(const Primitive& prim, const Aabb& clip) {
  if (const auto* pr = std::get_if<Prism>(&prim)) {
    const auto [lo, hi] = profile_bounds(pr->profile);
    return transform_box(pr->frame, {lo.x, lo.y, 0.0}, {hi.x, hi.y, pr->depth});
  }
  if (const auto* cy = std::get_if<Cylinder>(&prim)) {
    const Vec2 c = cy->center;
    if (!cy->through) {
      return transform_box(cy->frame, {c.x - cy->radius, c.y - cy->radius, cy->w_min},
                           {c.x + cy->radius, c.y + cy->radius, cy->w_max});
    }
    // Only the radial extent is bounded; take the normal extent from the clip box.
    const Vec3 n = cy->frame.normal();
    Aabb box = transform_box(cy->frame, {c.x - cy->radius, c.y - cy->radius, 0.0},
                             {c.x + cy->radius, c.y + cy->radius, 0.0});
    for (int i = 0; i < 3; ++i) {
      if (std::abs(n[i]) > 0.0) {
        box.min[i] = clip.min[i];
        box.max[i] = clip.max[i];
      }
    }
    return box;
  }
  const auto& sp = std::get<Sphere>(prim);
  const Vec3 r{sp.radius, sp.radius, sp.radius};
  return {sp.center - r, sp.center + r};
}

}  // namespace cadforge
