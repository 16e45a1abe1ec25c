#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "cadforge/cadlang.hpp"
#include "cadforge/kernel.hpp"

namespace cadforge {

enum class ViewKind { Top, Front, Side };

inline const char* view_name(ViewKind v) {
  switch (v) {
    case ViewKind::Top: return "top";
    case ViewKind::Front: return "front";
    case ViewKind::Side: return "side";
  }
  return "top";
}

/// Projection axis and the two world axes spanning the drawing plane.
///   top   looks along Z, drawing (x, y)
///   front looks along Y, drawing (x, z)
///   side  looks along X, drawing (y, z)
struct ViewAxes {
  int depth;
  int u;
  int v;
};

inline ViewAxes view_axes(ViewKind k) {
  switch (k) {
    case ViewKind::Top: return {2, 0, 1};
    case ViewKind::Front: return {1, 0, 2};
    case ViewKind::Side: return {0, 1, 2};
  }
  return {2, 0, 1};
}

inline Vec2 project_point(ViewKind k, Vec3 p) {
  const ViewAxes a = view_axes(k);
  return {p[a.u], p[a.v]};
}

/// Binary silhouette image along one world axis; `negative` views from the opposite side,
/// which mirrors the u coordinate.
struct Silhouette {
  int width = 0;
  int height = 0;
  Vec2 origin;  // world (u, v) of pixel (0, 0)'s lower-left corner, before mirroring
  double cell = 1.0;
  bool mirrored = false;
  std::vector<std::uint8_t> pixels;  // row-major, v rows

  bool at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return pixels[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t filled() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
  }
  friend bool operator==(const Silhouette&, const Silhouette&) = default;
};

inline Silhouette silhouette(const VoxelGrid& grid, int axis, bool negative = false) {
  const GridSpec& s = grid.spec();
  const int ua = axis == 0 ? 1 : 0;
  const int va = axis == 2 ? 1 : 2;
  Silhouette img;
  img.width = s.res[ua];
  img.height = s.res[va];
  img.origin = {s.origin[ua], s.origin[va]};
  img.cell = s.cell;
  img.mirrored = negative;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
  std::array<int, 3> c{};
  for (c[2] = 0; c[2] < s.res[2]; ++c[2]) {
    for (c[1] = 0; c[1] < s.res[1]; ++c[1]) {
      for (c[0] = 0; c[0] < s.res[0]; ++c[0]) {
        if (!grid.get(c[0], c[1], c[2])) continue;
        const int x = negative ? img.width - 1 - c[ua] : c[ua];
        img.pixels[static_cast<std::size_t>(c[va]) * img.width + x] = 1;
      }
    }
  }
  return img;
}

/// Occupied-cell count of the largest slice perpendicular to `axis`.
inline std::size_t max_slice_count(const VoxelGrid& grid, int axis) {
  const GridSpec& s = grid.spec();
  std::vector<std::size_t> counts(static_cast<std::size_t>(s.res[axis]), 0);
  std::array<int, 3> c{};
  for (c[2] = 0; c[2] < s.res[2]; ++c[2])
    for (c[1] = 0; c[1] < s.res[1]; ++c[1])
      for (c[0] = 0; c[0] < s.res[0]; ++c[0])
        if (grid.get(c[0], c[1], c[2])) ++counts[static_cast<std::size_t>(c[axis])];
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

inline double polygon_area(const std::vector<Vec2>& loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) a += cross(loop[i], loop[(i + 1) % loop.size()]);
  return 0.5 * a;
}

/// Closed contours of a binary image at iso-level 0.5 through pixel centers. Loops keep
/// the filled side on their left: outer boundaries are counter-clockwise, holes clockwise.
/// Coordinates are in pixel units with pixel (x, y) centered at (x + 0.5, y + 0.5).
inline std::vector<std::vector<Vec2>> marching_squares(const Silhouette& img) {
  // Sample lattice covers pixels -1..width so every loop closes inside it.
  const int nx = img.width + 2;
  const int ny = img.height + 2;
  const auto inside = [&](int i, int j) { return img.at(i - 1, j - 1); };
  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> +1.
  const auto hedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i); };
  const auto vedge = [&](int i, int j) { return 2L * (static_cast<long>(j) * nx + i) + 1; };
  const auto edge_point = [&](long id) {
    const long cell = id / 2;
    const double i = static_cast<double>(cell % nx);
    const double j = static_cast<double>(cell / nx);
    // Lattice point (i, j) sits at pixel center (i - 1 + 0.5, j - 1 + 0.5).
    return (id % 2 == 0) ? Vec2{i, j - 0.5} : Vec2{i - 0.5, j};
  };
  std::map<long, long> next;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      // Corners and edges in counter-clockwise order: bl, br, tr, tl.
      const std::array<bool, 4> in = {inside(i, j), inside(i + 1, j), inside(i + 1, j + 1), inside(i, j + 1)};
      const std::array<long, 4> edges = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)};
      for (int e = 0; e < 4; ++e) {
        if (!(in[e] && !in[(e + 1) % 4])) continue;
        // Leaving the filled region here; connect to the next edge re-entering it.
        for (int step = 1; step < 4; ++step) {
          const int f = (e + step) % 4;
          if (!in[f] && in[(f + 1) % 4]) {
            next[edges[e]] = edges[f];
            break;
          }
        }
      }
    }
  }
  std::vector<std::vector<Vec2>> loops;
  while (!next.empty()) {
    const long start = next.begin()->first;
    std::vector<Vec2> loop;
    long cur = start;
    do {
      loop.push_back(edge_point(cur));
      const auto it = next.find(cur);
      if (it == next.end()) break;
      cur = it->second;
      next.erase(it);
    } while (cur != start);
    // Drop collinear vertices.
    std::vector<Vec2> simplified;
    for (std::size_t k = 0; k < loop.size(); ++k) {
      const Vec2 prev = loop[(k + loop.size() - 1) % loop.size()];
      const Vec2 nxt = loop[(k + 1) % loop.size()];
      if (cross(loop[k] - prev, nxt - loop[k]) != 0.0) simplified.push_back(loop[k]);
    }
    if (simplified.size() >= 3) loops.push_back(std::move(simplified));
  }
  return loops;
}

struct Annotation {
  std::string kind;   // width, height, radius, circumradius, depth, cut_depth, hole_radius, chamfer, extent_x..z
  std::string label;  // drawing text, e.g. "10", "R1", "C0.5"
  double value = 0;   // model units
  ViewKind view = ViewKind::Top;
  Vec2 from;  // anchor segment in view coordinates
  Vec2 to;
};

struct DrawingView {
  ViewKind kind = ViewKind::Top;
  std::vector<std::vector<Vec2>> loops;  // world (u, v) coordinates

  double area() const {
    double a = 0.0;
    for (const auto& l : loops) a += polygon_area(l);
    return a;
  }
  std::pair<Vec2, Vec2> bounds() const {
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};
    for (const auto& l : loops)
      for (const Vec2& p : l) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
      }
    return {lo, hi};
  }
};

struct ViewDrawing {
  std::array<DrawingView, 3> views;  // top, front, side
  std::vector<Annotation> annotations;

  const DrawingView& view(ViewKind k) const { return views[static_cast<std::size_t>(k)]; }
};

namespace detail {

inline int dominant_axis(Vec3 d) {
  const double ax = std::abs(d.x);
  const double ay = std::abs(d.y);
  const double az = std::abs(d.z);
  if (ax >= ay && ax >= az) return 0;
  return ay >= az ? 1 : 2;
}

/// View whose projection direction is `axis` (for in-plane sketch dimensions).
inline ViewKind view_along(int axis) {
  return axis == 2 ? ViewKind::Top : (axis == 1 ? ViewKind::Front : ViewKind::Side);
}

/// View that shows a length measured along world `axis`.
inline ViewKind view_showing(int axis) {
  return axis == 1 ? ViewKind::Side : ViewKind::Front;
}

class AnnotationBuilder {
 public:
  void add(std::string kind, std::string label, double value, ViewKind view, Vec3 a, Vec3 b) {
    out.push_back({std::move(kind), std::move(label), value, view, project_point(view, a), project_point(view, b)});
  }

  void sketch(const Frame& f, const Statement& s) {
    const ViewKind in_plane = view_along(dominant_axis(f.normal()));
    if (const auto* r = std::get_if<stmt::Rect>(&s)) {
      const double hw = 0.5 * r->width;
      const double hh = 0.5 * r->height;
      add("width", format_number(r->width), r->width, in_plane, f.to_world(-hw, -hh, 0), f.to_world(hw, -hh, 0));
      add("height", format_number(r->height), r->height, in_plane, f.to_world(hw, -hh, 0), f.to_world(hw, hh, 0));
    } else if (const auto* c = std::get_if<stmt::Circle>(&s)) {
      add("radius", "R" + format_number(c->radius), c->radius, in_plane, f.to_world(0, 0, 0),
          f.to_world(c->radius, 0, 0));
    } else if (const auto* p = std::get_if<stmt::Polygon>(&s)) {
      add("circumradius", "R" + format_number(p->circumradius), p->circumradius, in_plane, f.to_world(0, 0, 0),
          f.to_world(p->circumradius, 0, 0));
    }
  }

  void depth(const char* kind, const Frame& f, const Profile& profile, double d) {
    const auto [lo, hi] = profile_bounds(profile);
    const ViewKind v = view_showing(dominant_axis(f.normal()));
    add(kind, format_number(d), d, v, f.to_world(hi.x, lo.y, 0), f.to_world(hi.x, lo.y, d));
  }

  std::vector<Annotation> out;
};

}  // namespace detail

/// Dimension annotations from program parameters plus bounding-box extents not already
/// covered by a parameter of equal value.
inline std::vector<Annotation> annotate(const CadProgram& program, const Aabb& bounds) {
  detail::AnnotationBuilder ab;
  Frame current;
  Frame sketch_frame;
  Profile sketch;
  Frame last_frame;
  Profile last_profile;
  double last_depth = 0;
  for (const Statement& s : program.statements) {
    if (const auto* wp = std::get_if<stmt::Workplane>(&s)) {
      current = plane_frame(wp->plane, wp->origin);
    } else if (is_sketch(s)) {
      sketch_frame = current;
      sketch = detail::sketch_profile(s);
      ab.sketch(current, s);
    } else if (const auto* e = std::get_if<stmt::Extrude>(&s)) {
      ab.depth("depth", sketch_frame, sketch, e->depth);
      last_frame = sketch_frame;
      last_profile = sketch;
      last_depth = e->depth;
    } else if (const auto* c = std::get_if<stmt::CutExtrude>(&s)) {
      ab.depth("cut_depth", sketch_frame, sketch, c->depth);
    } else if (const auto* h = std::get_if<stmt::Hole>(&s)) {
      const ViewKind v = detail::view_along(detail::dominant_axis(last_frame.normal()));
      ab.add("hole_radius", "R" + format_number(h->radius), h->radius, v,
             last_frame.to_world(h->center.x, h->center.y, last_depth),
             last_frame.to_world(h->center.x + h->radius, h->center.y, last_depth));
    } else if (const auto* ch = std::get_if<stmt::Chamfer>(&s)) {
      const auto [lo, hi] = profile_bounds(last_profile);
      const ViewKind v = detail::view_showing(detail::dominant_axis(last_frame.normal()));
      ab.add("chamfer", "C" + format_number(ch->leg), ch->leg, v,
             last_frame.to_world(hi.x, lo.y, last_depth - ch->leg), last_frame.to_world(hi.x, lo.y, last_depth));
    }
  }
  const Vec3 e = bounds.extent();
  static constexpr std::array<const char*, 3> kinds = {"extent_x", "extent_y", "extent_z"};
  for (int a = 0; a < 3; ++a) {
    const double value = e[a];
    const bool covered = std::any_of(ab.out.begin(), ab.out.end(),
                                     [&](const Annotation& an) { return std::abs(an.value - value) <= 1e-9; });
    if (covered) continue;
    Vec3 to = bounds.min;
    to[a] = bounds.max[a];
    ab.add(kinds[static_cast<std::size_t>(a)], format_number(value), value, detail::view_showing(a), bounds.min, to);
  }
  return ab.out;
}

/// Silhouettes of an occupancy grid along each world axis, contoured into world-space
/// loops, plus annotations from the source program.
inline ViewDrawing project_views(const VoxelGrid& grid, const CadProgram& program) {
  if (grid.count() == 0) throw GeometryError(GeometryErrorCode::EmptyGrid, "no occupied cells");
  ViewDrawing drawing;
  for (ViewKind k : {ViewKind::Top, ViewKind::Front, ViewKind::Side}) {
    const ViewAxes axes = view_axes(k);
    const Silhouette img = silhouette(grid, axes.depth);
    DrawingView& view = drawing.views[static_cast<std::size_t>(k)];
    view.kind = k;
    for (auto& loop : marching_squares(img)) {
      for (Vec2& p : loop) p = img.origin + p * img.cell;
      view.loops.push_back(std::move(loop));
    }
  }
  drawing.annotations = annotate(program, build_solid(program).bounds());
  return drawing;
}

// ---------------------------------------------------------------------------------------
// Export

namespace detail {

inline std::string fmt(double v, int decimals = 3) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos) s = decimals > 0 ? "0." + std::string(decimals, '0') : "0";
  return s;
}

/// Sheet placement: front top-left, side to its right, top below the front view.
struct SheetLayout {
  std::array<Vec2, 3> offset;  // added to view coordinates
  Vec2 size;

  explicit SheetLayout(const ViewDrawing& d, double gap) {
    std::array<std::pair<Vec2, Vec2>, 3> b;
    for (std::size_t i = 0; i < 3; ++i) {
      b[i] = d.views[i].bounds();
      for (const Annotation& a : d.annotations) {
        if (static_cast<std::size_t>(a.view) != i) continue;
        for (Vec2 p : {a.from, a.to}) {
          b[i].first = {std::min(b[i].first.x, p.x), std::min(b[i].first.y, p.y)};
          b[i].second = {std::max(b[i].second.x, p.x), std::max(b[i].second.y, p.y)};
        }
      }
    }
    const auto w = [&](ViewKind k) { return b[static_cast<std::size_t>(k)].second.x - b[static_cast<std::size_t>(k)].first.x; };
    const auto h = [&](ViewKind k) { return b[static_cast<std::size_t>(k)].second.y - b[static_cast<std::size_t>(k)].first.y; };
    const double col0 = std::max(w(ViewKind::Front), w(ViewKind::Top));
    const double row_top = h(ViewKind::Top);
    const double row_front = std::max(h(ViewKind::Front), h(ViewKind::Side));
    // Sheet coordinates: y up, origin bottom-left.
    const auto place = [&](ViewKind k, double x, double y) {
      offset[static_cast<std::size_t>(k)] = Vec2{x, y} - b[static_cast<std::size_t>(k)].first;
    };
    place(ViewKind::Top, gap, gap);
    place(ViewKind::Front, gap, 2 * gap + row_top);
    place(ViewKind::Side, 2 * gap + col0, 2 * gap + row_top);
    size = {3 * gap + col0 + w(ViewKind::Side), 3 * gap + row_top + row_front};
  }
};

inline Vec2 dimension_offset(const Annotation& a, double gap) {
  const Vec2 d = a.to - a.from;
  const double len = length(d);
  if (len <= 0.0) return {0.0, 0.0};
  // Radii are drawn in place, linear dimensions offset outward (to the right of from->to).
  if (a.kind == "radius" || a.kind == "circumradius" || a.kind == "hole_radius") return {0.0, 0.0};
  return Vec2{d.y, -d.x} * (gap / len);
}

}  // namespace detail

/// SVG 1.1 sheet with silhouettes and dimension lines (arrowheads and text).
inline std::string to_svg(const ViewDrawing& d) {
  const Vec2 extent = [&] {
    double m = 0;
    for (const auto& v : d.views) {
      const auto [lo, hi] = v.bounds();
      m = std::max({m, hi.x - lo.x, hi.y - lo.y});
    }
    return Vec2{m, m};
  }();
  const double gap = std::max(0.15 * extent.x, 1.0);
  const detail::SheetLayout layout(d, gap);
  const double scale = 800.0 / std::max(layout.size.x, layout.size.y);
  const auto X = [&](double x) { return detail::fmt(x * scale); };
  const auto Y = [&](double y) { return detail::fmt((layout.size.y - y) * scale); };
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::fmt(layout.size.x * scale) +
       "\" height=\"" + detail::fmt(layout.size.y * scale) + "\">\n";
  s += "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"6\" "
       "markerHeight=\"6\" orient=\"auto-start-reverse\"><path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>\n";
  for (const auto& v : d.views) {
    const Vec2 off = layout.offset[static_cast<std::size_t>(v.kind)];
    s += "<g id=\"" + std::string(view_name(v.kind)) + "\">\n";
    s += "<path fill=\"#dde\" fill-rule=\"evenodd\" stroke=\"black\" stroke-width=\"1\" d=\"";
    for (const auto& loop : v.loops) {
      for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2 p = loop[i] + off;
        s += (i == 0 ? "M" : " L") + X(p.x) + "," + Y(p.y);
      }
      s += " Z ";
    }
    s += "\"/>\n";
    for (const Annotation& a : d.annotations) {
      if (a.view != v.kind) continue;
      const Vec2 shift = detail::dimension_offset(a, 0.3 * gap);
      const Vec2 p = a.from + off + shift;
      const Vec2 q = a.to + off + shift;
      const bool radial = shift.x == 0.0 && shift.y == 0.0;
      s += "<line x1=\"" + X(p.x) + "\" y1=\"" + Y(p.y) + "\" x2=\"" + X(q.x) + "\" y2=\"" + Y(q.y) +
           "\" stroke=\"blue\" stroke-width=\"0.8\"" + (radial ? "" : " marker-start=\"url(#arrow)\"") +
           " marker-end=\"url(#arrow)\"/>\n";
      const Vec2 m = (p + q) * 0.5;
      s += "<text x=\"" + X(m.x) + "\" y=\"" + Y(m.y) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"blue\" text-anchor=\"middle\">" + a.label +
           "</text>\n";
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Minimal DXF R12: an ENTITIES section with LINE, CIRCLE and TEXT only.
inline std::string to_dxf(const ViewDrawing& d) {
  double m = 0;
  for (const auto& v : d.views) {
    const auto [lo, hi] = v.bounds();
    m = std::max({m, hi.x - lo.x, hi.y - lo.y});
  }
  const double gap = std::max(0.15 * m, 1.0);
  const detail::SheetLayout layout(d, gap);
  std::string s;
  const auto group = [&](int code, const std::string& value) {
    s += std::to_string(code) + "\n" + value + "\n";
  };
  const auto num = [&](int code, double v) { group(code, detail::fmt(v, 6)); };
  const auto line = [&](const char* layer, Vec2 a, Vec2 b) {
    group(0, "LINE");
    group(8, layer);
    num(10, a.x);
    num(20, a.y);
    num(30, 0.0);
    num(11, b.x);
    num(21, b.y);
    num(31, 0.0);
  };
  group(0, "SECTION");
  group(2, "ENTITIES");
  for (const auto& v : d.views) {
    const Vec2 off = layout.offset[static_cast<std::size_t>(v.kind)];
    for (const auto& loop : v.loops)
      for (std::size_t i = 0; i < loop.size(); ++i) line("SILHOUETTE", loop[i] + off, loop[(i + 1) % loop.size()] + off);
    for (const Annotation& a : d.annotations) {
      if (a.view != v.kind) continue;
      const Vec2 shift = detail::dimension_offset(a, 0.3 * gap);
      const Vec2 p = a.from + off + shift;
      const Vec2 q = a.to + off + shift;
      line("DIMENSION", p, q);
      if (shift.x == 0.0 && shift.y == 0.0) {
        group(0, "CIRCLE");
        group(8, "DIMENSION");
        num(10, p.x);
        num(20, p.y);
        num(30, 0.0);
        num(40, a.value);
      }
      const Vec2 mid = (p + q) * 0.5;
      group(0, "TEXT");
      group(8, "DIMENSION");
      num(10, mid.x);
      num(20, mid.y);
      num(30, 0.0);
      num(40, 0.08 * gap + 0.2);
      group(1, a.label);
    }
  }
  group(0, "ENDSEC");
  group(0, "EOF");
  return s;
}

}  // namespace cadforge
