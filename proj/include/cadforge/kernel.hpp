#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadforge/cadlang.hpp"
#include "cadforge/sdf.hpp"

namespace cadforge {

enum class GeometryErrorCode { EmptySolid, ResolutionTooLow, SamplingFailure, EmptyGrid };

inline const char* geometry_error_name(GeometryErrorCode c) {
  switch (c) {
    case GeometryErrorCode::EmptySolid: return "empty_solid";
    case GeometryErrorCode::ResolutionTooLow: return "resolution_too_low";
    case GeometryErrorCode::SamplingFailure: return "sampling_failure";
    case GeometryErrorCode::EmptyGrid: return "empty_grid";
  }
  return "geometry_error";
}

class GeometryError : public std::runtime_error {
 public:
  GeometryError(GeometryErrorCode code, const std::string& what)
      : std::runtime_error(std::string(geometry_error_name(code)) + ": " + what), code_(code) {}
  GeometryErrorCode code() const { return code_; }

 private:
  GeometryErrorCode code_;
};

/// Left-deep CSG composition: each node is unioned with, or subtracted from, everything
/// before it.
class ImplicitSolid {
 public:
  struct Node {
    bool subtract = false;
    Primitive primitive;
    Aabb bounds;
  };

  void unite(Primitive prim) {
    Aabb b = primitive_bounds(prim, bounds_);
    bounds_.expand(b);
    nodes_.push_back({false, std::move(prim), b});
  }

  void subtract(Primitive prim) {
    Aabb b = primitive_bounds(prim, bounds_);
    nodes_.push_back({true, std::move(prim), b});
  }

  double sdf(Vec3 p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const Node& n : nodes_) {
      const double f = primitive_sdf(n.primitive, p);
      d = n.subtract ? std::max(d, -f) : std::min(d, f);
    }
    return d;
  }

  /// Conservative bounds of the zero level set (union parts only).
  const Aabb& bounds() const { return bounds_; }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<Node> nodes() { return nodes_; }
  bool has_material_nodes() const { return !bounds_.empty(); }

 private:
  std::vector<Node> nodes_;
  Aabb bounds_;
};

// ---------------------------------------------------------------------------------------
// Voxel grids

inline constexpr int kMinResolution = 8;
inline constexpr int kDefaultResolution = 64;
inline constexpr double kDefaultPadding = 0.05;

/// Cubic cells; cell (i, j, k) has center origin + (i + 0.5, j + 0.5, k + 0.5) * cell.
struct GridSpec {
  Vec3 origin;
  double cell = 1.0;
  std::array<int, 3> res{kMinResolution, kMinResolution, kMinResolution};

  std::size_t cell_count() const {
    return static_cast<std::size_t>(res[0]) * static_cast<std::size_t>(res[1]) *
           static_cast<std::size_t>(res[2]);
  }
  Vec3 center(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * cell, (j + 0.5) * cell, (k + 0.5) * cell};
  }
  Aabb box() const {
    return {origin, origin + Vec3{res[0] * cell, res[1] * cell, res[2] * cell}};
  }
  double cell_volume() const { return cell * cell * cell; }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Grid over `box` with `resolution` cells along the longest axis and at least
/// kMinResolution along the others. The padding is a whole number of cells of at least
/// `padding` times the longest extent, so cell faces are registered to box.min.
inline GridSpec grid_for(const Aabb& box, int resolution = kDefaultResolution,
                         double padding = kDefaultPadding) {
  if (resolution < kMinResolution)
    throw GeometryError(GeometryErrorCode::ResolutionTooLow, "resolution " + std::to_string(resolution));
  const Vec3 e = box.extent();
  double longest = std::max({e.x, e.y, e.z});
  if (!(longest > 0.0)) longest = 1.0;
  const int pad = static_cast<int>(std::ceil(resolution * padding / (1.0 + 2.0 * padding) - 1e-9));
  GridSpec g;
  g.cell = longest / (resolution - 2 * pad);
  for (int a = 0; a < 3; ++a) {
    int n = static_cast<int>(std::ceil(e[a] / g.cell - 1e-9));
    if (e[a] == longest) n = resolution - 2 * pad;
    const int total = std::max(kMinResolution, n + 2 * pad);
    const int before = pad + (total - n - 2 * pad) / 2;
    g.res[a] = total;
    g.origin[a] = box.min[a] - before * g.cell;
  }
  return g;
}

class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(const GridSpec& spec) : spec_(spec), bits_((spec.cell_count() + 63) / 64, 0) {}

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return spec_.cell_count(); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * spec_.res[1] + static_cast<std::size_t>(j)) * spec_.res[0] +
           static_cast<std::size_t>(i);
  }
  bool get(std::size_t idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1u; }
  bool get(int i, int j, int k) const { return get(index(i, j, k)); }
  void set(std::size_t idx, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (idx & 63);
    if (v) {
      bits_[idx >> 6] |= mask;
    } else {
      bits_[idx >> 6] &= ~mask;
    }
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : bits_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  double occupied_volume() const { return static_cast<double>(count()) * spec_.cell_volume(); }

  std::span<const std::uint64_t> words() const { return bits_; }

  /// |a ∩ b| and |a ∪ b| for grids sharing a spec.
  friend std::pair<std::size_t, std::size_t> overlap_counts(const VoxelGrid& a, const VoxelGrid& b) {
    if (!(a.spec_ == b.spec_)) throw std::invalid_argument("overlap_counts: grids differ");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t w = 0; w < a.bits_.size(); ++w) {
      inter += static_cast<std::size_t>(std::popcount(a.bits_[w] & b.bits_[w]));
      uni += static_cast<std::size_t>(std::popcount(a.bits_[w] | b.bits_[w]));
    }
    return {inter, uni};
  }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  GridSpec spec_;
  std::vector<std::uint64_t> bits_;
};

/// Occupy cell iff sdf(cell center) <= 0.
///
/// Nodes are applied in order, each only over the cells its bounds can reach; this equals
/// sampling the composed field because min/max composition preserves sign exactly.
inline VoxelGrid voxelize(const ImplicitSolid& solid, const GridSpec& spec) {
  for (int r : spec.res)
    if (r < kMinResolution)
      throw GeometryError(GeometryErrorCode::ResolutionTooLow, "resolution " + std::to_string(r) + " < 8");
  if (!spec.box().contains(solid.bounds()))
    throw std::invalid_argument("voxelize: grid does not contain the solid bounds");
  VoxelGrid grid(spec);
  for (const auto& node : solid.nodes()) {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    bool any = true;
    for (int a = 0; a < 3; ++a) {
      const double l = (node.bounds.min[a] - spec.origin[a]) / spec.cell - 0.5;
      const double h = (node.bounds.max[a] - spec.origin[a]) / spec.cell - 0.5;
      lo[a] = std::max(0, static_cast<int>(std::floor(std::max(l, -1.0))) - 1);
      hi[a] = std::min(spec.res[a] - 1, static_cast<int>(std::ceil(std::min(h, spec.res[a] + 1.0))) + 1);
      if (lo[a] > hi[a]) any = false;
    }
    if (!any) continue;
    for (int k = lo[2]; k <= hi[2]; ++k) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const std::size_t idx = grid.index(i, j, k);
          if (node.subtract) {
            if (!grid.get(idx)) continue;
            if (primitive_sdf(node.primitive, spec.center(i, j, k)) < 0.0) grid.set(idx, false);
          } else {
            if (grid.get(idx)) continue;
            if (primitive_sdf(node.primitive, spec.center(i, j, k)) <= 0.0) grid.set(idx, true);
          }
        }
      }
    }
  }
  return grid;
}

inline GridSpec default_grid(const ImplicitSolid& solid, int resolution = kDefaultResolution) {
  return grid_for(solid.bounds(), resolution);
}

// ---------------------------------------------------------------------------------------
// Program evaluation

namespace detail {

inline Profile sketch_profile(const Statement& s) {
  if (const auto* r = std::get_if<stmt::Rect>(&s)) return RectProfile{r->width, r->height};
  if (const auto* c = std::get_if<stmt::Circle>(&s)) return CircleProfile{c->radius};
  if (const auto* p = std::get_if<stmt::Polygon>(&s))
    return PolygonProfile{regular_polygon(p->sides, p->circumradius)};
  return PolygonProfile{std::get<stmt::Polyline>(s).points};
}

}  // namespace detail

/// Build the CSG composition without the emptiness check.
inline ImplicitSolid build_solid(const CadProgram& program) {
  ImplicitSolid solid;
  Frame current;
  Frame sketch_frame;
  Profile sketch;
  std::size_t last_extrusion = static_cast<std::size_t>(-1);
  for (const Statement& s : program.statements) {
    if (const auto* wp = std::get_if<stmt::Workplane>(&s)) {
      current = plane_frame(wp->plane, wp->origin);
    } else if (is_sketch(s)) {
      sketch = detail::sketch_profile(s);
      sketch_frame = current;
    } else if (const auto* e = std::get_if<stmt::Extrude>(&s)) {
      solid.unite(Prism{sketch_frame, sketch, e->depth, 0.0});
      last_extrusion = solid.nodes().size() - 1;
    } else if (const auto* c = std::get_if<stmt::CutExtrude>(&s)) {
      solid.subtract(Prism{sketch_frame, sketch, c->depth, 0.0});
    } else if (const auto* h = std::get_if<stmt::Hole>(&s)) {
      const auto& base = std::get<Prism>(solid.nodes()[last_extrusion].primitive);
      Cylinder cyl;
      cyl.frame = base.frame;
      cyl.center = h->center;
      cyl.radius = h->radius;
      cyl.through = h->through;
      cyl.w_min = h->through ? 0.0 : 0.5 * base.depth;
      cyl.w_max = base.depth;
      solid.subtract(cyl);
    } else if (const auto* ch = std::get_if<stmt::Chamfer>(&s)) {
      std::get<Prism>(solid.nodes()[last_extrusion].primitive).chamfer = ch->leg;
    }
  }
  return solid;
}

/// Evaluate a valid program; throws GeometryError(EmptySolid) if no default-grid cell is
/// occupied.
inline ImplicitSolid evaluate(const CadProgram& program) {
  ImplicitSolid solid = build_solid(program);
  if (!solid.has_material_nodes() || voxelize(solid, default_grid(solid)).count() == 0)
    throw GeometryError(GeometryErrorCode::EmptySolid, "all material removed");
  return solid;
}

// ---------------------------------------------------------------------------------------
// Surface sampling

struct PointCloud {
  std::vector<Vec3> points;
  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

struct SamplingOptions {
  double band_fraction = 0.02;       // candidate band |sdf| <= band * diagonal
  double tolerance_fraction = 1e-5;  // accepted |sdf| <= tol * diagonal
  int projection_steps = 24;
  std::size_t candidates_per_point = 400;  // budget before SamplingFailure
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Vec3 sdf_gradient(const ImplicitSolid& solid, Vec3 p, double h) {
  return {(solid.sdf(p + Vec3{h, 0, 0}) - solid.sdf(p - Vec3{h, 0, 0})) / (2 * h),
          (solid.sdf(p + Vec3{0, h, 0}) - solid.sdf(p - Vec3{0, h, 0})) / (2 * h),
          (solid.sdf(p + Vec3{0, 0, h}) - solid.sdf(p - Vec3{0, 0, h})) / (2 * h)};
}

}  // namespace detail

/// n points on the zero level set: uniform candidates within a band around the surface,
/// Newton-projected along the numeric gradient.
inline PointCloud surface_points(const ImplicitSolid& solid, std::size_t n, std::uint64_t seed,
                                 const SamplingOptions& opt = {}) {
  if (n == 0) throw std::invalid_argument("surface_points: n must be >= 1");
  if (!solid.has_material_nodes()) throw GeometryError(GeometryErrorCode::EmptySolid, "no material");
  const Aabb box = solid.bounds().padded(kDefaultPadding);
  const double diag = solid.bounds().diagonal();
  const double band = opt.band_fraction * diag;
  const double tol = opt.tolerance_fraction * diag;
  const double h = 1e-6 * diag;
  const Vec3 e = box.extent();
  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  const std::size_t budget = opt.candidates_per_point * n;
  for (std::size_t tries = 0; cloud.points.size() < n; ++tries) {
    if (tries >= budget)
      throw GeometryError(GeometryErrorCode::SamplingFailure,
                          "candidate budget exhausted after " + std::to_string(cloud.points.size()) + " points");
    Vec3 p{box.min.x + e.x * detail::unit_uniform(rng), box.min.y + e.y * detail::unit_uniform(rng),
           box.min.z + e.z * detail::unit_uniform(rng)};
    double f = solid.sdf(p);
    if (std::abs(f) > band) continue;
    for (int step = 0; step < opt.projection_steps && std::abs(f) > tol; ++step) {
      const Vec3 g = detail::sdf_gradient(solid, p, h);
      const double g2 = dot(g, g);
      if (!(g2 > 1e-12)) break;
      p = p - g * (f / g2);
      f = solid.sdf(p);
    }
    if (std::abs(f) <= tol) cloud.points.push_back(p);
  }
  return cloud;
}

// ---------------------------------------------------------------------------------------
// Debug dump: 16-byte header then alternating run lengths (uint32 LE), first run empty.
//   bytes 0..3   "CFVG"
//   bytes 4..9   resolution x, y, z (uint16 LE)
//   bytes 10..11 format version (uint16 LE, = 1)
//   bytes 12..15 cell size (float32 LE)

namespace detail {

inline void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>(v >> 24)};
  os.write(b, 4);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4] = {};
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("voxel dump truncated");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2] = {};
  if (!is.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error("voxel dump truncated");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace detail

inline void write_rle(std::ostream& os, const VoxelGrid& grid) {
  const GridSpec& s = grid.spec();
  os.write("CFVG", 4);
  for (int r : s.res) detail::put_u16(os, static_cast<std::uint16_t>(r));
  detail::put_u16(os, 1);
  detail::put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(s.cell)));
  bool value = false;
  std::uint32_t run = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.get(i) != value) {
      detail::put_u32(os, run);
      value = !value;
      run = 0;
    }
    ++run;
  }
  detail::put_u32(os, run);
}

/// Occupancy and resolution from a dump. The origin is not stored; the cell size is float32.
inline VoxelGrid read_rle(std::istream& is) {
  char magic[4] = {};
  if (!is.read(magic, 4) || std::memcmp(magic, "CFVG", 4) != 0) throw std::runtime_error("bad voxel dump magic");
  GridSpec s;
  for (int& r : s.res) r = detail::get_u16(is);
  if (detail::get_u16(is) != 1) throw std::runtime_error("unsupported voxel dump version");
  s.cell = std::bit_cast<float>(detail::get_u32(is));
  VoxelGrid grid(s);
  std::size_t pos = 0;
  bool value = false;
  while (pos < grid.size()) {
    const std::uint32_t run = detail::get_u32(is);
    if (pos + run > grid.size()) throw std::runtime_error("voxel dump overruns grid");
    if (value)
      for (std::uint32_t i = 0; i < run; ++i) grid.set(pos + i, true);
    pos += run;
    value = !value;
  }
  return grid;
}

}  // namespace cadforge
