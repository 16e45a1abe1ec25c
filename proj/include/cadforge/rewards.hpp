#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <regex>
#include <string>
#include <string_view>

#include "cadforge/cadlang.hpp"
#include "cadforge/kernel.hpp"

namespace cadforge {

enum class FailureCdPolicy {
  GtDiagonal,  // non-executable samples score CD = ground-truth bbox diagonal
  Exclude,     // non-executable samples are left out of the CD statistics
};

struct RewardConfig {
  double lambda_format = 1.0;
  double lambda_exec = 1.0;
  double lambda_iou = 0.8;
  double lambda_plane = 0.2;
  double beta = 0.5;    // origin-deviation penalty
  double gamma = 0.25;  // axis-deviation penalty
  int grid_resolution = kDefaultResolution;
  std::size_t cd_samples = 2048;
  FailureCdPolicy failure_cd = FailureCdPolicy::GtDiagonal;

  void validate() const {
    if (lambda_format < 0 || lambda_exec < 0 || lambda_iou < 0 || lambda_plane < 0 || beta < 0 || gamma < 0)
      throw std::invalid_argument("reward weights must be non-negative");
    if (grid_resolution < kMinResolution) throw std::invalid_argument("grid resolution must be >= 8");
    if (cd_samples == 0) throw std::invalid_argument("cd sample count must be >= 1");
  }
};

enum class Diagnostic { Ok, Format, Syntax, Semantic, EmptySolid, Geometry };

inline const char* diagnostic_name(Diagnostic d) {
  switch (d) {
    case Diagnostic::Ok: return "ok";
    case Diagnostic::Format: return "format";
    case Diagnostic::Syntax: return "syntax";
    case Diagnostic::Semantic: return "semantic";
    case Diagnostic::EmptySolid: return "empty_solid";
    case Diagnostic::Geometry: return "geometry";
  }
  return "unknown";
}

struct RewardBreakdown {
  double r_format = 0;
  double r_exec = 0;
  double r_iou = 0;
  double dis_ori = 0;      // normalized by the ground-truth bbox diagonal
  double dis_ori_raw = 0;  // model units
  double dis_vec = 0;
  double r_plane = 0;
  double total = 0;
  Diagnostic diagnostic = Diagnostic::Ok;
  std::optional<CadProgram> program;
};

/// Ground truth prepared once per record: parsed program, solid, frame and scale.
struct RewardTarget {
  CadProgram program;
  ImplicitSolid solid;
  Frame frame;
  double bbox_diagonal = 0;

  static RewardTarget from_program(CadProgram program) {
    RewardTarget t;
    t.solid = evaluate(program);
    t.frame = workplane_frame(program);
    t.bbox_diagonal = t.solid.bounds().diagonal();
    t.program = std::move(program);
    return t;
  }
  static RewardTarget from_text(std::string_view text) { return from_program(parse(text)); }
};

// ---------------------------------------------------------------------------------------
// Format

/// Reasoning block strictly before the code block, one of each, both non-blank.
inline double format_reward(std::string_view text) {
  static const std::regex pattern(
      R"(^\s*<think>((?:(?!</?think>|</?code>)[\s\S])*)</think>\s*<code>((?:(?!</?think>|</?code>)[\s\S])*)</code>\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(text.begin(), text.end(), m, pattern)) return 0.0;
  const auto blank = [](const auto& sub) {
    return std::all_of(sub.first, sub.second, [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
  };
  return (blank(m[1]) || blank(m[2])) ? 0.0 : 1.0;
}

/// Body of the <code> block of a format-valid output.
inline std::optional<std::string> extract_code(std::string_view text) {
  if (format_reward(text) == 0.0) return std::nullopt;
  const std::size_t open = text.find("<code>");
  const std::size_t close = text.find("</code>");
  return std::string(text.substr(open + 6, close - open - 6));
}

/// Canonical wrapping of a reasoning body and program text.
inline std::string wrap_output(std::string_view program_text, std::string_view reasoning = "step") {
  std::string out = "<think>";
  out += reasoning.empty() ? std::string_view("step") : reasoning;
  out += "</think>\n<code>\n";
  out += program_text;
  out += "</code>\n";
  return out;
}

// ---------------------------------------------------------------------------------------
// Executability

struct ExecResult {
  double reward = 0;
  Diagnostic diagnostic = Diagnostic::Format;
  std::optional<CadProgram> program;
  std::optional<ImplicitSolid> solid;
  std::string message;
};

/// Parse then evaluate the code block. Every failure maps to reward 0 with a diagnostic.
inline ExecResult exec_reward(std::string_view text) {
  ExecResult r;
  const auto code = extract_code(text);
  if (!code) {
    r.message = "output does not match <think>...</think><code>...</code>";
    return r;
  }
  try {
    CadProgram program = parse(*code);
    ImplicitSolid solid = evaluate(program);
    r.reward = 1.0;
    r.diagnostic = Diagnostic::Ok;
    r.program = std::move(program);
    r.solid = std::move(solid);
  } catch (const ParseError& e) {
    r.diagnostic = e.kind() == ParseErrorKind::Syntax ? Diagnostic::Syntax : Diagnostic::Semantic;
    r.message = e.what();
  } catch (const GeometryError& e) {
    r.diagnostic = e.code() == GeometryErrorCode::EmptySolid ? Diagnostic::EmptySolid : Diagnostic::Geometry;
    r.message = e.what();
  }
  return r;
}

// ---------------------------------------------------------------------------------------
// Geometry

/// Shared grid for comparing two solids: padded union of their bounds.
inline GridSpec comparison_grid(const ImplicitSolid& a, const ImplicitSolid& b, int resolution = kDefaultResolution) {
  Aabb box = a.bounds();
  box.expand(b.bounds());
  return grid_for(box, resolution);
}

/// Jaccard index of the two occupancy grids on the shared grid.
inline double iou_reward(const ImplicitSolid& gen, const ImplicitSolid& gt, const RewardConfig& cfg = {}) {
  if (!gen.has_material_nodes() || !gt.has_material_nodes())
    throw GeometryError(GeometryErrorCode::EmptySolid, "iou of an empty solid");
  const GridSpec grid = comparison_grid(gen, gt, cfg.grid_resolution);
  const VoxelGrid a = voxelize(gen, grid);
  const VoxelGrid b = voxelize(gt, grid);
  const auto [inter, uni] = overlap_counts(a, b);
  if (uni == 0) throw GeometryError(GeometryErrorCode::EmptySolid, "both solids empty on the comparison grid");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct PlaneReward {
  double dis_ori = 0;
  double dis_ori_raw = 0;
  double dis_vec = 0;
  double r_plane = 0;
};

inline double cosine_similarity(Vec3 a, Vec3 b) { return dot(a, b) / (length(a) * length(b)); }

inline PlaneReward plane_reward(const Frame& gen, const Frame& gt, double gt_bbox_diagonal, const RewardConfig& cfg = {}) {
  if (!(gt_bbox_diagonal > 0.0)) throw std::invalid_argument("plane_reward: diagonal must be positive");
  PlaneReward r;
  r.dis_ori_raw = length(gen.origin - gt.origin);
  r.dis_ori = r.dis_ori_raw / gt_bbox_diagonal;
  r.dis_vec = 0.5 * (2.0 - cosine_similarity(gen.x_axis, gt.x_axis) - cosine_similarity(gen.y_axis, gt.y_axis));
  r.r_plane = std::clamp(1.0 - cfg.beta * r.dis_ori - cfg.gamma * r.dis_vec, 0.0, 1.0);
  return r;
}

/// Gated composite: format and executability multiply the geometric terms.
inline RewardBreakdown total_reward(std::string_view text, const RewardTarget& target, const RewardConfig& cfg = {}) {
  RewardBreakdown out;
  out.r_format = format_reward(text);
  if (out.r_format == 0.0) {
    out.diagnostic = Diagnostic::Format;
    return out;
  }
  ExecResult exec = exec_reward(text);
  out.r_exec = exec.reward;
  out.diagnostic = exec.diagnostic;
  if (out.r_exec == 0.0) return out;
  out.r_iou = iou_reward(*exec.solid, target.solid, cfg);
  const PlaneReward pr = plane_reward(workplane_frame(*exec.program), target.frame, target.bbox_diagonal, cfg);
  out.dis_ori = pr.dis_ori;
  out.dis_ori_raw = pr.dis_ori_raw;
  out.dis_vec = pr.dis_vec;
  out.r_plane = pr.r_plane;
  out.total = cfg.lambda_format * out.r_format * cfg.lambda_exec * out.r_exec *
              (cfg.lambda_iou * out.r_iou + cfg.lambda_plane * out.r_plane);
  out.program = std::move(exec.program);
  return out;
}

}  // namespace cadforge
