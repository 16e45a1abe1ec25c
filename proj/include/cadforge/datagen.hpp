#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadforge/cadlang.hpp"
#include "cadforge/kernel.hpp"
#include "cadforge/metrics.hpp"
#include "cadforge/rewards.hpp"
#include "cadforge/views.hpp"

namespace cadforge {

enum class PrimitiveKind { Rect, Circle, Polygon, Polyline };
enum class ModifierKind { Hole, Chamfer, Cut };

inline const char* primitive_name(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::Rect: return "rect";
    case PrimitiveKind::Circle: return "circle";
    case PrimitiveKind::Polygon: return "polygon";
    case PrimitiveKind::Polyline: return "polyline";
  }
  return "rect";
}

inline const char* modifier_name(ModifierKind k) {
  switch (k) {
    case ModifierKind::Hole: return "hole";
    case ModifierKind::Chamfer: return "chamfer";
    case ModifierKind::Cut: return "cut";
  }
  return "hole";
}

/// Constraints for random program generation. Every literal lands on the 0.25 grid.
struct GenConfig {
  int min_statements = 3;
  int max_statements = 16;
  int min_pairs = 1;  // sketch/extrude pairs
  int max_pairs = 3;
  int max_modifiers = 3;
  std::map<PrimitiveKind, double> primitive_weights{
      {PrimitiveKind::Rect, 0.4}, {PrimitiveKind::Circle, 0.2}, {PrimitiveKind::Polygon, 0.2}, {PrimitiveKind::Polyline, 0.2}};
  std::map<ModifierKind, double> modifier_weights{
      {ModifierKind::Hole, 0.5}, {ModifierKind::Chamfer, 0.25}, {ModifierKind::Cut, 0.25}};
  std::array<double, 3> plane_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};  // XY, YZ, XZ
  double grid = 0.25;
  double offset_range = 8.0;  // |origin component| <= offset_range
  double min_size = 2.0;      // rect sides, 2 * radii
  double max_size = 20.0;
  double min_depth = 1.0;
  double max_depth = 12.0;
  int max_polygon_sides = 8;
  int rejection_budget = 200;
  std::uint64_t seed = 1234;

  void validate() const {
    const auto sums_to_one = [](auto const& weights) {
      double s = 0;
      for (const auto& w : weights) s += w;
      return std::abs(s - 1.0) <= 1e-9;
    };
    std::vector<double> pw;
    for (const auto& [k, w] : primitive_weights) pw.push_back(w);
    std::vector<double> mw;
    for (const auto& [k, w] : modifier_weights) mw.push_back(w);
    if (min_statements < 3 || min_statements > max_statements) throw std::invalid_argument("bad statement range");
    if (min_pairs < 1 || min_pairs > max_pairs) throw std::invalid_argument("bad sketch pair range");
    if (max_modifiers < 0) throw std::invalid_argument("bad modifier count");
    if (pw.empty() || !sums_to_one(pw)) throw std::invalid_argument("primitive weights must sum to 1");
    if (!mw.empty() && !sums_to_one(mw)) throw std::invalid_argument("modifier weights must sum to 1");
    if (!sums_to_one(plane_weights)) throw std::invalid_argument("plane weights must sum to 1");
    if (!(grid > 0) || !(min_size > 0) || min_size > max_size || !(min_depth > 0) || min_depth > max_depth)
      throw std::invalid_argument("bad numeric ranges");
    if (max_polygon_sides < 3) throw std::invalid_argument("max polygon sides must be >= 3");
  }
};

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

class GenRng {
 public:
  explicit GenRng(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * (hi - lo + 1 - 1e-12));
  }
  /// Grid value in [lo, hi].
  double grid_value(double lo, double hi, double step) {
    const int a = static_cast<int>(std::ceil(lo / step - 1e-9));
    const int b = static_cast<int>(std::floor(hi / step + 1e-9));
    if (a > b) return a * step;
    return integer(a, b) * step;
  }
  template <class Key>
  Key choose(const std::map<Key, double>& weights) {
    const double r = uniform();
    double acc = 0.0;
    for (const auto& [k, w] : weights) {
      acc += w;
      if (r < acc) return k;
    }
    return weights.rbegin()->first;
  }
  int choose(const std::array<double, 3>& weights) {
    const double r = uniform();
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      acc += weights[static_cast<std::size_t>(i)];
      if (r < acc) return i;
    }
    return 2;
  }

 private:
  std::mt19937_64 rng_;
};

inline double snap(double v, double step) { return std::round(v / step) * step; }

/// Largest centered disc radius inside a profile.
inline double inradius(const Profile& p) { return -profile_sdf(p, {0.0, 0.0}); }

/// Distance from the profile center to its farthest point.
inline double circumradius(const Profile& p) {
  if (const auto* r = std::get_if<RectProfile>(&p)) return 0.5 * std::hypot(r->width, r->height);
  if (const auto* c = std::get_if<CircleProfile>(&p)) return c->radius;
  double m = 0;
  for (const Vec2& v : std::get<PolygonProfile>(p).vertices) m = std::max(m, length(v));
  return m;
}

/// A sketch statement whose footprint has circumradius <= limit.
inline std::optional<Statement> random_sketch(GenRng& rng, const GenConfig& cfg, PrimitiveKind kind, double limit) {
  const double g = cfg.grid;
  const double max_half = std::min(0.5 * cfg.max_size, limit);
  const double min_half = 0.5 * cfg.min_size;
  if (max_half < min_half) return std::nullopt;
  switch (kind) {
    case PrimitiveKind::Rect: {
      const double w = rng.grid_value(cfg.min_size, 2 * max_half, g);
      const double hmax = std::sqrt(std::max(0.0, 4 * limit * limit - w * w));
      const double h = rng.grid_value(cfg.min_size, std::min(cfg.max_size, hmax), g);
      if (h < cfg.min_size || 0.5 * std::hypot(w, h) > limit) return std::nullopt;
      return stmt::Rect{w, h};
    }
    case PrimitiveKind::Circle:
      return stmt::Circle{rng.grid_value(min_half, max_half, g)};
    case PrimitiveKind::Polygon:
      return stmt::Polygon{rng.integer(3, cfg.max_polygon_sides), rng.grid_value(min_half, max_half, g)};
    case PrimitiveKind::Polyline: {
      // Star-shaped around the origin: sorted angles, random radii, snapped to the grid.
      const int n = rng.integer(3, 6);
      std::vector<double> angles;
      for (int k = 0; k < n; ++k) angles.push_back(2 * std::numbers::pi * (k + 0.15 + 0.7 * rng.uniform()) / n);
      stmt::Polyline pl;
      for (double a : angles) {
        const double r = min_half + (max_half - min_half) * rng.uniform();
        pl.points.push_back({snap(r * std::cos(a), g), snap(r * std::sin(a), g)});
      }
      for (std::size_t k = 0; k < pl.points.size(); ++k)
        if (pl.points[k] == pl.points[(k + 1) % pl.points.size()]) return std::nullopt;
      if (!is_simple_polygon(pl.points) || std::abs(signed_area(pl.points)) < cfg.min_size) return std::nullopt;
      const Profile prof = PolygonProfile{pl.points};
      if (inradius(prof) < 0.5 || circumradius(prof) > limit) return std::nullopt;
      return pl;
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline bool is_simple_polygon(const std::vector<Vec2>& pts) { return detail::is_simple_polygon(pts); }
inline double signed_area(const std::vector<Vec2>& pts) { return detail::signed_area(pts); }

/// Random program: workplane, 1..3 stacked sketch/extrude pairs, then up to three
/// modifiers (holes inside the last profile, a chamfer on the last extrusion, a pocket cut
/// reaching its top face). Deterministic per seed.
inline CadProgram gen_program(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  detail::GenRng rng(seed);
  const double g = cfg.grid;
  std::vector<ModifierKind> allowed;
  for (const auto& [k, w] : cfg.modifier_weights)
    if (w > 0) allowed.push_back(k);

  for (int attempt = 0; attempt < cfg.rejection_budget; ++attempt) {
    CadProgram prog;
    const Plane plane = static_cast<Plane>(rng.choose(cfg.plane_weights));
    const Vec3 origin{rng.grid_value(-cfg.offset_range, cfg.offset_range, g),
                      rng.grid_value(-cfg.offset_range, cfg.offset_range, g),
                      rng.grid_value(-cfg.offset_range, cfg.offset_range, g)};
    prog.statements.emplace_back(stmt::Workplane{plane, origin});
    const Frame base = plane_frame(plane, origin);

    // p pairs take 3p statements including the leading workplane.
    const int pairs_fit = std::max(1, cfg.max_statements / 3);
    const int pairs = rng.integer(cfg.min_pairs, std::max(cfg.min_pairs, std::min(cfg.max_pairs, pairs_fit)));
    double height = 0.0;
    double limit = 0.5 * std::hypot(cfg.max_size, cfg.max_size);
    Profile last_profile;
    double last_depth = 0.0;
    bool ok = true;
    for (int p = 0; p < pairs && ok; ++p) {
      std::optional<Statement> sketch;
      for (int tries = 0; tries < 20 && !sketch; ++tries)
        sketch = detail::random_sketch(rng, cfg, rng.choose(cfg.primitive_weights), limit);
      if (!sketch) {
        ok = p > 0;
        break;
      }
      const double depth = rng.grid_value(cfg.min_depth, cfg.max_depth, g);
      if (p > 0) {
        const Vec3 o = base.origin + base.normal() * height;
        prog.statements.emplace_back(stmt::Workplane{plane, o});
      }
      prog.statements.push_back(*sketch);
      prog.statements.emplace_back(stmt::Extrude{depth});
      last_profile = detail::sketch_profile(*sketch);
      last_depth = depth;
      height += depth;
      // The next tier must sit inside this profile.
      limit = detail::inradius(last_profile) - g;
    }
    if (!ok) continue;

    const int budget_left = cfg.max_statements - static_cast<int>(prog.statements.size());
    const int modifiers = allowed.empty() ? 0 : rng.integer(0, cfg.max_modifiers);
    bool chamfered = false;
    bool cut = false;
    const double r_in = detail::inradius(last_profile);
    int used = 0;
    for (int m = 0; m < modifiers; ++m) {
      const ModifierKind kind = rng.choose(cfg.modifier_weights);
      if (kind == ModifierKind::Hole) {
        if (used + 1 > budget_left) continue;
        // Disc strictly inside the last profile with a one-grid-unit margin.
        bool placed = false;
        for (int tries = 0; tries < 20 && !placed; ++tries) {
          const double r = rng.grid_value(g, std::max(g, 0.5 * r_in), g);
          const double reach = std::max(0.0, r_in);
          const Vec2 c{rng.grid_value(-reach, reach, g), rng.grid_value(-reach, reach, g)};
          if (profile_sdf(last_profile, c) + r + g > 0.0) continue;
          prog.statements.emplace_back(stmt::Hole{c, r, rng.uniform() < 0.7});
          placed = true;
        }
        if (placed) ++used;
      } else if (kind == ModifierKind::Chamfer) {
        if (chamfered || used + 1 > budget_left) continue;
        const double max_leg = std::min(0.5 * last_depth, 0.5 * r_in) - g;
        if (max_leg < g) continue;
        prog.statements.emplace_back(stmt::Chamfer{rng.grid_value(g, max_leg, g)});
        chamfered = true;
        ++used;
      } else {
        if (cut || used + 3 > budget_left || last_depth < 2 * g + g) continue;
        // Pocket from the top face of the last extrusion, centered inside its profile.
        const double reach = std::max(0.0, r_in);
        const Vec2 c{rng.grid_value(-reach, reach, g), rng.grid_value(-reach, reach, g)};
        if (profile_sdf(last_profile, c) >= 0.0) continue;
        const double side_max = std::max(cfg.min_size, 2 * r_in);
        const double w = rng.grid_value(std::min(cfg.min_size, side_max) * 0.5, side_max, g);
        const double h = rng.grid_value(std::min(cfg.min_size, side_max) * 0.5, side_max, g);
        const double depth = rng.grid_value(g, last_depth - g, g);
        const double top = height;
        const Vec3 o = base.origin + base.x_axis * c.x + base.y_axis * c.y + base.normal() * (top - depth);
        prog.statements.emplace_back(stmt::Workplane{plane, o});
        prog.statements.emplace_back(stmt::Rect{w, h});
        prog.statements.emplace_back(stmt::CutExtrude{depth});
        cut = true;
        used += 3;
      }
    }
    const int n = static_cast<int>(prog.statements.size());
    if (n < cfg.min_statements || n > cfg.max_statements) continue;
    // Validity through the same gate as ingestion.
    try {
      const CadProgram reparsed = parse(emit(prog));
      if (!(reparsed == prog)) continue;
      (void)evaluate(prog);
    } catch (const std::exception&) {
      continue;
    }
    return prog;
  }
  throw GenerationExhausted("no valid program within " + std::to_string(cfg.rejection_budget) + " attempts");
}

// ---------------------------------------------------------------------------------------
// Stage-1 filter

struct FilterResult {
  bool pass = false;
  Diagnostic diagnostic = Diagnostic::Ok;
  std::string message;
};

inline FilterResult filter_stage1_text(std::string_view text) {
  FilterResult r;
  try {
    const CadProgram prog = parse(text);
    const ImplicitSolid solid = evaluate(prog);
    if (voxelize(solid, default_grid(solid)).count() < 1) {
      r.diagnostic = Diagnostic::EmptySolid;
      r.message = "no occupied cell";
      return r;
    }
    r.pass = true;
  } catch (const ParseError& e) {
    r.diagnostic = e.kind() == ParseErrorKind::Syntax ? Diagnostic::Syntax : Diagnostic::Semantic;
    r.message = e.what();
  } catch (const GeometryError& e) {
    r.diagnostic = e.code() == GeometryErrorCode::EmptySolid ? Diagnostic::EmptySolid : Diagnostic::Geometry;
    r.message = e.what();
  }
  return r;
}

/// Executable validation: the emitted text reparses, evaluates non-empty and occupies at
/// least one default-grid cell.
inline FilterResult filter_stage1(const CadProgram& program) { return filter_stage1_text(emit(program)); }

// ---------------------------------------------------------------------------------------
// Records

/// Pluggable reasoning provider: (expert id, program text, drawing) -> narration.
using CotProvider = std::function<std::string(int, const std::string&, const ViewDrawing&)>;

/// Deterministic narration built from the program's statements; each expert id uses a
/// different style so the reasoning bodies are distinguishable.
inline std::string template_cot(int expert_id, const CadProgram& program) {
  std::vector<std::string> words;
  for (const Statement& s : program.statements) {
    const std::string text = emit(s);
    words.push_back(text.substr(0, text.find(' ')));
  }
  std::string out;
  const auto push = [&](const std::string& w) {
    if (!out.empty()) out += ' ';
    out += w;
  };
  switch ((expert_id - 1) % 3) {
    case 0:
      for (const auto& w : words) {
        push("step");
        push(w);
      }
      break;
    case 1:
      push("plan");
      for (const auto& w : words) push(w);
      push("check");
      break;
    default:
      push("view");
      for (auto it = words.rbegin(); it != words.rend(); ++it) {
        push("dim");
        push(*it);
      }
      break;
  }
  return out;
}

inline CotProvider template_cot_provider() {
  return [](int expert, const std::string& text, const ViewDrawing&) { return template_cot(expert, parse(text)); };
}

struct DatasetRecord {
  std::string id;
  std::uint64_t seed = 0;
  std::string program_text;  // canonical
  CadProgram program;
  Frame frame;
  ViewDrawing drawing;
  double bbox_diagonal = 0;
  std::map<int, std::string> cot;  // expert id -> reasoning

  RewardTarget target() const { return RewardTarget::from_program(program); }

  /// Canonical training target / self-evaluation text for an expert.
  std::string wrapped(int expert_id = 0) const {
    const auto it = cot.find(expert_id);
    return wrap_output(program_text, it == cot.end() ? std::string_view("step") : std::string_view(it->second));
  }
};

struct RecordOptions {
  CotProvider cot_provider;  // empty: reasoning slots stay empty
  int experts = 3;
};

inline DatasetRecord build_record(const CadProgram& program, std::uint64_t seed, std::string id = {},
                                  const RecordOptions& opt = {}) {
  DatasetRecord r;
  r.id = std::move(id);
  r.seed = seed;
  r.program = program;
  r.program_text = emit(program);
  const ImplicitSolid solid = evaluate(program);
  const VoxelGrid grid = voxelize(solid, default_grid(solid));
  r.drawing = project_views(grid, program);
  r.frame = workplane_frame(program);
  r.bbox_diagonal = solid.bounds().diagonal();
  if (opt.cot_provider)
    for (int e = 1; e <= opt.experts; ++e) r.cot[e] = opt.cot_provider(e, r.program_text, r.drawing);
  return r;
}

// JSON ------------------------------------------------------------------------------------

inline nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }
inline Vec3 json_vec3(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline nlohmann::json record_json(const DatasetRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["seed"] = r.seed;
  j["program"] = r.program_text;
  j["frame"] = {{"origin", vec_json(r.frame.origin)}, {"x_axis", vec_json(r.frame.x_axis)}, {"y_axis", vec_json(r.frame.y_axis)}};
  j["bbox_diagonal"] = r.bbox_diagonal;
  nlohmann::json ann = nlohmann::json::array();
  for (const Annotation& a : r.drawing.annotations) {
    ann.push_back({{"kind", a.kind},
                   {"label", a.label},
                   {"value", a.value},
                   {"view", view_name(a.view)},
                   {"anchor", {{a.from.x, a.from.y}, {a.to.x, a.to.y}}}});
  }
  j["annotations"] = ann;
  nlohmann::json cot = nlohmann::json::object();
  for (const auto& [e, text] : r.cot) cot[std::to_string(e)] = text;
  j["cot"] = cot;
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// One directory per record: program.cad, record.json, views.svg, views.dxf.
inline void write_record(const DatasetRecord& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "program.cad", r.program_text);
  write_text_file(dir / "record.json", record_json(r).dump(2) + "\n");
  write_text_file(dir / "views.svg", to_svg(r.drawing));
  write_text_file(dir / "views.dxf", to_dxf(r.drawing));
}

/// Load a record directory; geometry-derived fields are recomputed from the program.
inline DatasetRecord read_record(const std::filesystem::path& dir) {
  const nlohmann::json j = nlohmann::json::parse(read_text_file(dir / "record.json"));
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.program_text = j.at("program").get<std::string>();
  r.program = parse(r.program_text);
  r.frame.origin = json_vec3(j.at("frame").at("origin"));
  r.frame.x_axis = json_vec3(j.at("frame").at("x_axis"));
  r.frame.y_axis = json_vec3(j.at("frame").at("y_axis"));
  r.bbox_diagonal = j.at("bbox_diagonal").get<double>();
  for (const auto& [k, v] : j.at("cot").items()) r.cot[std::stoi(k)] = v.get<std::string>();
  const ImplicitSolid solid = evaluate(r.program);
  r.drawing = project_views(voxelize(solid, default_grid(solid)), r.program);
  return r;
}

// Dataset ---------------------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::uint64_t seed = 0;
  int statements = 0;
  int modifiers = 0;
};

struct Manifest {
  std::uint64_t master_seed = 0;
  std::vector<ManifestEntry> records;
  std::map<int, int> statement_histogram;
  std::map<std::string, int> kind_counts;  // planes, primitives, modifiers

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["master_seed"] = master_seed;
    j["count"] = records.size();
    nlohmann::json rec = nlohmann::json::array();
    for (const auto& e : records)
      rec.push_back({{"id", e.id}, {"seed", e.seed}, {"statements", e.statements}, {"modifiers", e.modifiers}});
    j["records"] = rec;
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [k, v] : statement_histogram) hist[std::to_string(k)] = v;
    j["statement_histogram"] = hist;
    j["kind_counts"] = kind_counts;
    return j;
  }
};

inline std::string record_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rec_%06zu", index);
  return buf;
}

/// Histogram keys for one program: plane id, primitive kinds and modifier kinds.
inline std::vector<std::string> program_kinds(const CadProgram& p) {
  std::vector<std::string> out;
  const auto& wp = std::get<stmt::Workplane>(p.statements.front());
  out.push_back(std::string("plane_") + plane_name(wp.plane));
  for (std::size_t i = 1; i < p.statements.size(); ++i) {
    const Statement& s = p.statements[i];
    if (std::holds_alternative<stmt::Workplane>(s) || std::holds_alternative<stmt::Extrude>(s)) continue;
    const std::string text = emit(s);
    out.push_back(text.substr(0, text.find(' ')));
  }
  return out;
}

inline int modifier_count(const CadProgram& p) {
  return static_cast<int>(std::count_if(p.statements.begin(), p.statements.end(), [](const Statement& s) { return is_modifier(s); }));
}

/// Generate `n` records with per-index derived seeds and write them under `out_dir`,
/// followed by manifest.json. Byte-identical for a fixed master seed.
inline Manifest generate_dataset(std::size_t n, const GenConfig& cfg, const std::filesystem::path& out_dir,
                                 const RecordOptions& opt = {}) {
  if (n == 0) throw std::invalid_argument("generate_dataset: n must be >= 1");
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  Manifest m;
  m.master_seed = cfg.seed;
  for (std::size_t i = 0; i < n; ++i) {
    // Derived seeds; a rejected seed advances to the next sub-seed.
    CadProgram prog;
    std::uint64_t seed = 0;
    for (std::uint64_t sub = 0;; ++sub) {
      seed = sample_seed(cfg.seed, (static_cast<std::uint64_t>(i) << 8) + sub);
      try {
        prog = gen_program(cfg, seed);
        if (filter_stage1(prog).pass) break;
      } catch (const GenerationExhausted&) {
      }
      if (sub == 255) throw GenerationExhausted("record " + std::to_string(i) + ": every sub-seed rejected");
    }
    const std::string id = record_id(i);
    const DatasetRecord rec = build_record(prog, seed, id, opt);
    write_record(rec, out_dir / id);
    const int stmts = static_cast<int>(prog.statements.size());
    m.records.push_back({id, seed, stmts, modifier_count(prog)});
    ++m.statement_histogram[stmts];
    for (const auto& k : program_kinds(prog)) ++m.kind_counts[k];
  }
  write_text_file(out_dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

/// Record directories of a dataset, sorted by name.
inline std::vector<std::filesystem::path> record_dirs(const std::filesystem::path& dataset) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dataset))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "record.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace cadforge
