#include <gtest/gtest.h>

#include <random>

#include "cadforge/datagen.hpp"
#include "cadforge/rewards.hpp"

using namespace cadforge;

namespace {

const char* kBox = "workplane XY (0,0,0); rect 10 6; extrude 4;";

ImplicitSolid solid_of(std::string_view text) { return evaluate(parse(text)); }

Vec3 rotate(Vec3 v, Vec3 axis, double angle) {
  const Vec3 k = normalized(axis);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return v * c + cross(k, v) * s + k * (dot(k, v) * (1 - c));
}

}  // namespace

TEST(FormatReward, Examples) {
  EXPECT_EQ(format_reward("<think>reason</think><code>workplane XY (0,0,0);</code>"), 1.0);
  EXPECT_EQ(format_reward("  <think>a</think>\n<code>b</code>\n "), 1.0);
  EXPECT_EQ(format_reward("<code>x</code><think>y</think>"), 0.0);
  EXPECT_EQ(format_reward("<think>y</think>"), 0.0);
  EXPECT_EQ(format_reward("<think> </think><code>x</code>"), 0.0);
  EXPECT_EQ(format_reward("<think>a</think><code>\n</code>"), 0.0);
  EXPECT_EQ(format_reward("<think>a</think><code>b</code><code>c</code>"), 0.0);
  EXPECT_EQ(format_reward("<think>a<think>b</think><code>c</code>"), 0.0);
  EXPECT_EQ(format_reward("x<think>a</think><code>b</code>"), 0.0);
  EXPECT_EQ(format_reward(""), 0.0);
}

TEST(ExecReward, HappyPath) {
  const ExecResult r = exec_reward(wrap_output(kBox));
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_EQ(r.diagnostic, Diagnostic::Ok);
  ASSERT_TRUE(r.program.has_value());
  EXPECT_EQ(r.program->statements.size(), 3u);
}

TEST(ExecReward, Failures) {
  EXPECT_EQ(exec_reward(wrap_output("rect 10;;;")).diagnostic, Diagnostic::Syntax);
  EXPECT_EQ(exec_reward(wrap_output("rect 10 6; extrude 4;")).diagnostic, Diagnostic::Semantic);
  const ExecResult empty = exec_reward(
      wrap_output("workplane XY (0,0,0); rect 4 4; extrude 2; workplane XY (0,0,0); rect 6 6; cut 2;"));
  EXPECT_EQ(empty.reward, 0.0);
  EXPECT_EQ(empty.diagnostic, Diagnostic::EmptySolid);
  EXPECT_FALSE(empty.program.has_value());
  EXPECT_EQ(exec_reward(kBox).diagnostic, Diagnostic::Format);
}

TEST(IouReward, Identity) {
  const ImplicitSolid s = solid_of(kBox);
  EXPECT_EQ(iou_reward(s, s), 1.0);
}

TEST(IouReward, HalfOffsetUnitCubes) {
  const ImplicitSolid a = solid_of("workplane XY (0,0,0); rect 1 1; extrude 1;");
  const ImplicitSolid b = solid_of("workplane XY (0.5,0,0); rect 1 1; extrude 1;");
  EXPECT_NEAR(iou_reward(a, b), 1.0 / 3.0, 0.02);
}

TEST(IouReward, DisjointIsZero) {
  const ImplicitSolid a = solid_of("workplane XY (0,0,0); rect 1 1; extrude 1;");
  const ImplicitSolid b = solid_of("workplane XY (3,0,0); rect 1 1; extrude 1;");
  EXPECT_EQ(iou_reward(a, b), 0.0);
}

TEST(IouReward, SymmetricBitExact) {
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 15; ++s) {
    const ImplicitSolid a = evaluate(gen_program(cfg, s));
    const ImplicitSolid b = evaluate(gen_program(cfg, s + 100));
    EXPECT_EQ(iou_reward(a, b), iou_reward(b, a));
  }
}

TEST(IouReward, AxisAlignedBoxesMatchClosedForm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> size(1, 6);
  std::uniform_real_distribution<double> off(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const double w1 = size(rng), h1 = size(rng), d1 = size(rng);
    const double w2 = size(rng), h2 = size(rng), d2 = size(rng);
    const Vec3 o{off(rng), off(rng), off(rng)};
    ImplicitSolid a;
    a.unite(Prism{plane_frame(Plane::XY, {0, 0, 0}), RectProfile{w1, h1}, d1, 0});
    ImplicitSolid b;
    b.unite(Prism{plane_frame(Plane::XY, o), RectProfile{w2, h2}, d2, 0});
    const auto overlap = [](double lo1, double hi1, double lo2, double hi2) {
      return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
    };
    const double inter = overlap(-w1 / 2, w1 / 2, o.x - w2 / 2, o.x + w2 / 2) *
                         overlap(-h1 / 2, h1 / 2, o.y - h2 / 2, o.y + h2 / 2) * overlap(0, d1, o.z, o.z + d2);
    const double expected = inter / (w1 * h1 * d1 + w2 * h2 * d2 - inter);
    EXPECT_NEAR(iou_reward(a, b), expected, 0.02) << i;
  }
}

TEST(PlaneReward, Examples) {
  const Frame f = plane_frame(Plane::XY, {1, 2, 3});
  const PlaneReward same = plane_reward(f, f, 5.0);
  EXPECT_EQ(same.dis_ori, 0.0);
  EXPECT_EQ(same.dis_vec, 0.0);
  EXPECT_EQ(same.r_plane, 1.0);

  Frame turned = f;
  turned.x_axis = f.y_axis;
  turned.y_axis = f.x_axis * -1.0;
  EXPECT_NEAR(plane_reward(turned, f, 5.0).dis_vec, 1.0, 1e-12);

  Frame moved = f;
  moved.origin = f.origin + Vec3{3, 4, 0};
  const PlaneReward r = plane_reward(moved, f, 5.0);
  EXPECT_NEAR(r.dis_ori, 1.0, 1e-12);
  EXPECT_NEAR(r.dis_ori_raw, 5.0, 1e-12);
  EXPECT_NEAR(r.r_plane, 0.5, 1e-12);
}

TEST(PlaneReward, ClampedToUnitInterval) {
  const Frame f = plane_frame(Plane::XY, {0, 0, 0});
  Frame far = f;
  far.origin = {100, 0, 0};
  far.x_axis = {-1, 0, 0};
  far.y_axis = {0, -1, 0};
  const PlaneReward r = plane_reward(far, f, 1.0);
  EXPECT_EQ(r.r_plane, 0.0);
  EXPECT_NEAR(r.dis_vec, 2.0, 1e-12);
}

TEST(PlaneReward, RejectsNonPositiveDiagonal) {
  const Frame f;
  EXPECT_THROW((void)plane_reward(f, f, 0.0), std::invalid_argument);
}

TEST(PlaneReward, InvariantUnderSharedIsometry) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  const Plane planes[] = {Plane::XY, Plane::YZ, Plane::XZ};
  for (int i = 0; i < 200; ++i) {
    Frame a = plane_frame(planes[rng() % 3], {u(rng), u(rng), u(rng)});
    Frame b = plane_frame(planes[rng() % 3], {u(rng), u(rng), u(rng)});
    const PlaneReward before = plane_reward(a, b, 4.0);
    const Vec3 axis{u(rng), u(rng), u(rng) + 0.1};
    const double angle = u(rng);
    const Vec3 t{u(rng), u(rng), u(rng)};
    for (Frame* f : {&a, &b}) {
      f->origin = rotate(f->origin, axis, angle) + t;
      f->x_axis = rotate(f->x_axis, axis, angle);
      f->y_axis = rotate(f->y_axis, axis, angle);
    }
    const PlaneReward after = plane_reward(a, b, 4.0);
    EXPECT_NEAR(before.dis_ori, after.dis_ori, 1e-9);
    EXPECT_NEAR(before.dis_vec, after.dis_vec, 1e-9);
    EXPECT_NEAR(before.r_plane, after.r_plane, 1e-9);
  }
}

TEST(TotalReward, IdentityIsOne) {
  const RewardTarget t = RewardTarget::from_text(kBox);
  const RewardBreakdown r = total_reward(wrap_output(kBox), t);
  EXPECT_EQ(r.r_iou, 1.0);
  EXPECT_EQ(r.r_plane, 1.0);
  EXPECT_NEAR(r.total, 1.0, 1e-12);
}

TEST(TotalReward, FormatFailureGatesEverything) {
  const RewardTarget t = RewardTarget::from_text(kBox);
  const RewardBreakdown r = total_reward(std::string("<code>") + kBox + "</code>", t);
  EXPECT_EQ(r.r_format, 0.0);
  EXPECT_EQ(r.r_exec, 0.0);
  EXPECT_EQ(r.r_iou, 0.0);
  EXPECT_EQ(r.r_plane, 0.0);
  EXPECT_EQ(r.total, 0.0);
}

TEST(TotalReward, HalfOverlapSameFrame) {
  const RewardTarget t = RewardTarget::from_text("workplane XY (0,0,0); rect 2 2; extrude 2;");
  const RewardBreakdown r = total_reward(wrap_output("workplane XY (0,0,0); rect 2 2; extrude 1;"), t);
  EXPECT_EQ(r.r_plane, 1.0);
  EXPECT_NEAR(r.r_iou, 0.5, 0.02);
  EXPECT_NEAR(r.total, 0.8 * r.r_iou + 0.2 * r.r_plane, 1e-12);
  EXPECT_NEAR(r.total, 0.6, 0.8 * 0.02);
}

TEST(TotalReward, WeightsAreConfigurable) {
  RewardConfig cfg;
  cfg.lambda_iou = 0.0;
  cfg.lambda_plane = 1.0;
  const RewardTarget t = RewardTarget::from_text(kBox);
  const RewardBreakdown r = total_reward(wrap_output("workplane XY (0,0,0); rect 1 1; extrude 1;"), t, cfg);
  EXPECT_EQ(r.total, 1.0);
  cfg.beta = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(TotalReward, FuzzedOutputsRespectGatingAndRange) {
  const RewardTarget t = RewardTarget::from_text(kBox);
  GenConfig cfg;
  std::mt19937_64 rng(23);
  const std::string noise = "<>/thinkcode;() 0123456789.-rectXY";
  for (int i = 0; i < 300; ++i) {
    std::string text = wrap_output(emit(gen_program(cfg, static_cast<std::uint64_t>(i))));
    const int edits = static_cast<int>(rng() % 4);
    for (int e = 0; e < edits; ++e) {
      const std::size_t pos = rng() % text.size();
      switch (rng() % 3) {
        case 0: text.erase(pos, 1 + rng() % 6); break;
        case 1: text.insert(pos, 1, noise[rng() % noise.size()]); break;
        default: text[pos] = noise[rng() % noise.size()]; break;
      }
      if (text.empty()) text = "x";
    }
    const RewardBreakdown r = total_reward(text, t);
    if (r.r_format == 0.0 || r.r_exec == 0.0) {
      EXPECT_EQ(r.total, 0.0) << text;
    }
    EXPECT_GE(r.total, 0.0);
    EXPECT_LE(r.total, 1.0 + 1e-12);
    EXPECT_GE(r.r_plane, 0.0);
    EXPECT_LE(r.r_plane, 1.0);
  }
}

TEST(WrapOutput, ExtractsCodeBody) {
  const std::string w = wrap_output(kBox, "plan rect");
  EXPECT_EQ(format_reward(w), 1.0);
  EXPECT_EQ(extract_code(w).value(), std::string("\n") + kBox);
  EXPECT_FALSE(extract_code("no tags").has_value());
}
