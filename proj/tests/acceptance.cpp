// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "cadforge/cadforge.hpp"
#include "fd_check.hpp"

using namespace cadforge;
namespace fs = std::filesystem;

namespace {

/// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(count_ - failed_) + "/" + std::to_string(count_) + " checks";
    if (!notes_.empty()) s += "; " + notes_;
    for (const auto& f : failures_) s += "\n    failed: " + f;
    return s;
  }

 private:
  int count_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

Diagnostic parse_kind(std::string_view text) {
  const auto r = try_parse(text);
  if (std::holds_alternative<CadProgram>(r)) return Diagnostic::Ok;
  return std::get<ParseError>(r).kind() == ParseErrorKind::Syntax ? Diagnostic::Syntax : Diagnostic::Semantic;
}

const char* kBox = "workplane XY (0,0,0); rect 10 6; extrude 4;";

// 1 ---------------------------------------------------------------------------------------

void reward_suite(Check& c) {
  c.expect(format_reward("<think>reason</think><code>workplane XY (0,0,0);</code>") == 1.0, "format: well formed");
  c.expect(format_reward("<code>x</code><think>y</think>") == 0.0, "format: order");
  c.expect(format_reward("<think>y</think>") == 0.0, "format: missing code");
  c.expect(format_reward("<think> </think><code>x</code>") == 0.0, "format: blank think");
  c.expect(format_reward("<think>a</think><code>b</code><code>c</code>") == 0.0, "format: duplicate code");
  c.expect(format_reward("x<think>a</think><code>b</code>") == 0.0, "format: leading text");
  c.expect(format_reward("") == 0.0, "format: empty");

  c.expect(exec_reward(wrap_output(kBox)).reward == 1.0, "exec: box");
  c.expect(exec_reward(wrap_output("rect 10;;;")).diagnostic == Diagnostic::Syntax, "exec: syntax");
  c.expect(exec_reward(wrap_output("rect 10 6; extrude 4;")).diagnostic == Diagnostic::Semantic, "exec: semantic");
  c.expect(exec_reward(wrap_output("workplane XY (0,0,0); rect 4 4; extrude 2; workplane XY (0,0,0); rect 6 6; cut 2;"))
                   .diagnostic == Diagnostic::EmptySolid,
           "exec: empty solid");

  const ImplicitSolid box = evaluate(parse(kBox));
  c.expect(iou_reward(box, box) == 1.0, "iou: identity");
  const ImplicitSolid u0 = evaluate(parse("workplane XY (0,0,0); rect 1 1; extrude 1;"));
  const ImplicitSolid u1 = evaluate(parse("workplane XY (0.5,0,0); rect 1 1; extrude 1;"));
  const ImplicitSolid u3 = evaluate(parse("workplane XY (3,0,0); rect 1 1; extrude 1;"));
  c.expect(near(iou_reward(u0, u1), 1.0 / 3.0, 0.02), "iou: half offset cubes");
  c.expect(iou_reward(u0, u3) == 0.0, "iou: disjoint");

  const Frame f = plane_frame(Plane::XY, {1, 2, 3});
  const PlaneReward same = plane_reward(f, f, 5.0);
  c.expect(same.r_plane == 1.0 && same.dis_ori == 0.0 && same.dis_vec == 0.0, "plane: identical frames");
  Frame turned = f;
  turned.x_axis = f.y_axis;
  turned.y_axis = f.x_axis * -1.0;
  c.expect(near(plane_reward(turned, f, 5.0).dis_vec, 1.0, 1e-12), "plane: quarter turn");
  Frame moved = f;
  moved.origin = f.origin + Vec3{3, 4, 0};
  const PlaneReward m = plane_reward(moved, f, 5.0);
  c.expect(near(m.dis_ori, 1.0, 1e-12) && near(m.r_plane, 0.5, 1e-12), "plane: shifted origin");

  const RewardTarget t = RewardTarget::from_text(kBox);
  c.expect(near(total_reward(wrap_output(kBox), t).total, 1.0, 1e-12), "total: identity");
  c.expect(total_reward(std::string("<code>") + kBox + "</code>", t).total == 0.0, "total: format gate");
  const RewardTarget t2 = RewardTarget::from_text("workplane XY (0,0,0); rect 2 2; extrude 2;");
  const RewardBreakdown half = total_reward(wrap_output("workplane XY (0,0,0); rect 2 2; extrude 1;"), t2);
  c.expect(near(half.total, 0.6, 0.8 * 0.02) && half.r_plane == 1.0, "total: half overlap");

  // cadlang
  const CadProgram p = parse(kBox);
  c.expect(p.statements.size() == 3, "parse: three statements");
  try {
    (void)parse("workplane XY (0,0,0); rect -1 6; extrude 4;");
    c.expect(false, "parse: negative dimension accepted");
  } catch (const ParseError& e) {
    c.expect(e.kind() == ParseErrorKind::Semantic && e.line() == 1 && e.column() == 23, "parse: negative dimension at 1:23");
  }
  c.expect(parse_kind("rect 10 6; extrude 4;") == Diagnostic::Semantic, "parse: missing workplane");
  c.expect(parse_kind("workplane XY (0,0,0);\nrect 10;;;") == Diagnostic::Syntax, "parse: syntax");
  c.expect(parse_kind("workplane XY (0,0,0); rect 4 4; extrude 2; chamfer 0.5; chamfer 0.25;") == Diagnostic::Semantic,
           "parse: duplicate chamfer");
  c.expect(parse(emit(p)) == p, "emit: round trip");
  c.expect(format_number(2.5000001) == "2.5" && format_number(-0.0) == "0", "emit: number formatting");
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const CadProgram g = gen_program(cfg, s);
    if (parse(emit(g)) != g) c.expect(false, "emit round trip, seed " + std::to_string(s));
  }

  // Gating on fuzzed outputs.
  std::mt19937_64 rng(2024);
  const std::string noise = "<>/thinkcode;() 0123456789.-rectXY";
  int gated = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text = wrap_output(emit(gen_program(cfg, static_cast<std::uint64_t>(i))));
    const int edits = static_cast<int>(rng() % 5);
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
      ++gated;
      if (r.total != 0.0) c.expect(false, "fuzz gate, sample " + std::to_string(i));
    }
    if (!(r.total >= 0.0 && r.total <= 1.0 + 1e-12)) c.expect(false, "fuzz range, sample " + std::to_string(i));
  }
  c.expect(gated > 0, "fuzz produced gated outputs");
  c.note(std::to_string(gated) + "/1000 fuzzed outputs gated");
}

// 2 ---------------------------------------------------------------------------------------

void geometry_suite(Check& c) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> size(1, 6);
  std::uniform_real_distribution<double> off(-2.5, 2.5);
  const auto overlap = [](double lo1, double hi1, double lo2, double hi2) {
    return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
  };
  RewardConfig grid64;
  grid64.grid_resolution = 64;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double w1 = size(rng), h1 = size(rng), d1 = size(rng);
    const double w2 = size(rng), h2 = size(rng), d2 = size(rng);
    const Vec3 o{off(rng), off(rng), off(rng)};
    ImplicitSolid a;
    a.unite(Prism{plane_frame(Plane::XY, {0, 0, 0}), RectProfile{w1, h1}, d1, 0});
    ImplicitSolid b;
    b.unite(Prism{plane_frame(Plane::XY, o), RectProfile{w2, h2}, d2, 0});
    const double inter = overlap(-w1 / 2, w1 / 2, o.x - w2 / 2, o.x + w2 / 2) *
                         overlap(-h1 / 2, h1 / 2, o.y - h2 / 2, o.y + h2 / 2) * overlap(0, d1, o.z, o.z + d2);
    const double expected = inter / (w1 * h1 * d1 + w2 * h2 * d2 - inter);
    const double got = iou_reward(a, b, grid64);
    worst = std::max(worst, std::abs(got - expected));
    c.expect(std::abs(got - expected) <= 0.02, "box pair " + std::to_string(i) + ": " + fmt("%.4f", got) + " vs " +
                                                   fmt("%.4f", expected));
  }
  c.note("max |dIoU| " + fmt("%.4f", worst));

  const ImplicitSolid s = evaluate(parse("workplane XY (0,0,0); rect 10 6; extrude 4; hole (0,0) 1 through;"));
  const double expected = 240.0 - 4.0 * std::numbers::pi;
  const double vol = voxelize(s, default_grid(s, 64)).occupied_volume();
  c.expect(std::abs(vol - expected) <= 0.02 * expected, "box minus cylinder " + fmt("%.3f", vol));
  c.note("volume " + fmt("%.3f", vol) + " vs " + fmt("%.3f", expected));
}

// 3 ---------------------------------------------------------------------------------------

void gradient_suite(Check& c) {
  const std::vector<ExpertProfile> experts = default_experts(3);
  const auto report = [&](const char* name, const testing::FdReport& r) {
    c.expect(r.checked >= 20, std::string(name) + ": only " + std::to_string(r.checked) + " parameters");
    c.expect(r.max_rel_error < 1e-4, std::string(name) + ": rel error " + fmt("%.2e", r.max_rel_error));
    c.note(std::string(name) + " " + std::to_string(r.checked) + " params, max rel " + fmt("%.1e", r.max_rel_error));
  };
  {
    ToyPolicy pi(2, 2, 16);
    pi.randomize(8, 0.5);
    RolloutGroup g = sample_group(pi, experts[1], 0, 4, 0.9, 5);
    g.rewards = {1.0, 0.0, 0.5, 0.2};
    g.advantages = advantages(g.rewards);
    std::vector<double> grad(pi.parameter_count(), 0.0);
    grpo_loss(pi, g, &grad);
    report("grpo", testing::fd_check(pi, [&] { return grpo_loss(pi, g); }, grad, 24));
  }
  {
    ToyPolicy pi(2, 2, 16);
    pi.randomize(12, 0.7);
    const TokenSeq resp = tokenize("<think>plan rect</think><code>extrude 4;</code>");
    std::vector<double> grad(pi.parameter_count(), 0.0);
    collab_kl_loss(pi, resp, experts[0], experts[1], 1, &grad);
    report("kl", testing::fd_check(pi, [&] { return collab_kl_loss(pi, resp, experts[0], experts[1], 1); }, grad, 24));
  }
  {
    ToyPolicy pi(2, 3, 16);
    pi.randomize(2, 0.4);
    const std::vector<BufferEntry> e = {{0, tokenize("<think>step</think><code>rect 2 2;</code>"), 1, 1.0},
                                        {2, tokenize("<think>plan</think><code>circle 1;</code>"), 2, 0.75}};
    std::vector<double> grad(pi.parameter_count(), 0.0);
    sft_loss(pi, e, experts, &grad);
    report("sft", testing::fd_check(pi, [&] { return sft_loss(pi, e, experts); }, grad, 24));
  }
}

// 4 ---------------------------------------------------------------------------------------

void statistics_suite(Check& c) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> r(2 + rng() % 15);
    for (double& v : r) v = u(rng);
    const auto a = advantages(r);
    worst = std::max(worst, std::abs(std::accumulate(a.begin(), a.end(), 0.0)));
  }
  c.expect(worst < 1e-9, "advantage sum " + fmt("%.2e", worst));
  c.note("max |sum adv| " + fmt("%.1e", worst));

  // K = 0 leaves every k >= 1 eligible, so admission is the bare k/G draw.
  const ExpertProfile expert = default_experts(1).front();
  std::string freqs;
  for (int k = 0; k <= 4; ++k) {
    RolloutGroup g;
    g.expert = expert;
    g.rollouts.resize(4);
    g.rewards.assign(4, 1.0);
    for (int i = 0; i < k; ++i) g.rewards[static_cast<std::size_t>(i)] = 0.1;
    HardNegativeBuffer buf(16, 1000 + static_cast<std::uint64_t>(k));
    int admitted = 0;
    for (int t = 0; t < 10000; ++t) admitted += buffer_admit(buf, g, 0, 0.8, {vocab::kEos}) ? 1 : 0;
    const double freq = admitted / 10000.0;
    c.expect(std::abs(freq - k / 4.0) <= 0.02, "k=" + std::to_string(k) + " admitted " + fmt("%.4f", freq));
    freqs += (freqs.empty() ? "" : " ") + fmt("%.3f", freq);
  }
  c.note("admission k=0..4: " + freqs);
}

// 5 ---------------------------------------------------------------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  return out;
}

void dataset_suite(Check& c) {
  const fs::path root = fs::temp_directory_path() / "cadforge_acceptance";
  fs::remove_all(root);
  GenConfig cfg;
  cfg.seed = 1234;
  RecordOptions opt;
  opt.cot_provider = template_cot_provider();
  generate_dataset(1000, cfg, root / "a", opt);
  generate_dataset(1000, cfg, root / "b", opt);

  const auto dirs = record_dirs(root / "a");
  c.expect(dirs.size() == 1000, "record count " + std::to_string(dirs.size()));
  int passed = 0;
  int perfect = 0;
  for (const fs::path& d : dirs) {
    const DatasetRecord r = read_record(d);
    const bool pass = filter_stage1_text(read_text_file(d / "program.cad")).pass;
    const double self = total_reward(r.wrapped(1), r.target()).total;
    passed += pass ? 1 : 0;
    perfect += self == 1.0 ? 1 : 0;
    if (!pass) c.expect(false, d.filename().string() + " fails the filter");
    if (self != 1.0) c.expect(false, d.filename().string() + " self-reward " + fmt("%.17g", self));
  }
  c.expect(passed == 1000 && perfect == 1000, "filter and self-reward over all records");
  c.expect(tree_contents(root / "a") == tree_contents(root / "b"), "rerun is byte-identical");
  c.note(std::to_string(passed) + " pass filter, " + std::to_string(perfect) + " self-reward 1.0");
  fs::remove_all(root);
}

// 6 ---------------------------------------------------------------------------------------

void learning_suite(Check& c) {
  const std::vector<TrainItem> items = make_curriculum(20, curriculum_config(), 2);
  const auto run = [&](std::uint64_t seed, int K) {
    ToyRunConfig cfg;
    cfg.experts = 2;
    cfg.schedule.G = 4;
    cfg.schedule.K = K;
    cfg.schedule.seed = seed;
    return run_toy(items, cfg).train;
  };
  double with_buffer = 0;
  double without = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const TrainResult on = run(seed, 2);
    const TrainResult off = run(seed, 4);
    if (seed == 0) {
      c.expect(on.iterations == 300, "iterations " + std::to_string(on.iterations));
      const double ratio = on.final.mean_reward / on.initial.mean_reward;
      c.expect(ratio >= 1.3, "final/initial " + fmt("%.3f", ratio));
      c.note("seed 0: initial " + fmt("%.4f", on.initial.mean_reward) + ", final " + fmt("%.4f", on.final.mean_reward) +
             " (x" + fmt("%.2f", ratio) + ")");
    }
    c.expect(on.final.mean_reward > off.final.mean_reward, "seed " + std::to_string(seed) + ": buffer " +
                                                               fmt("%.4f", on.final.mean_reward) + " <= no-buffer " +
                                                               fmt("%.4f", off.final.mean_reward));
    with_buffer += on.final.mean_reward / 3;
    without += off.final.mean_reward / 3;
    per_seed += " s" + std::to_string(seed) + " " + fmt("%.4f", on.final.mean_reward) + "/" + fmt("%.4f", off.final.mean_reward);
  }
  c.expect(with_buffer > without, "buffer mean " + fmt("%.4f", with_buffer) + " <= no-buffer " + fmt("%.4f", without));
  c.note("buffer/no-buffer final:" + per_seed + "; mean " + fmt("%.4f", with_buffer) + "/" + fmt("%.4f", without));
}

// 7 ---------------------------------------------------------------------------------------

void metrics_suite(Check& c) {
  const auto executed = [](double cd, double iou) {
    SampleMetrics s;
    s.reward.r_format = 1;
    s.reward.r_exec = 1;
    s.reward.r_iou = iou;
    s.cd = cd;
    return s;
  };
  const std::vector<SampleMetrics> s = {executed(0.1, 1), executed(0.2, 1), executed(0.3, 1), executed(10.0, 1)};
  const MetricsTable t = aggregate_metrics(s);
  c.expect(near(t.mean_cd, 2.65, 1e-12), "mean cd " + fmt("%.17g", t.mean_cd));
  c.expect(near(t.median_cd, 0.25, 1e-12), "median cd " + fmt("%.17g", t.median_cd));
  c.expect(t.exec_percent == 100.0 && t.samples == 4, "exec 100%");
  c.expect(median({3, 1, 2}) == 2.0 && median({4, 1, 3, 2}) == 2.5, "median odd and even");

  const RewardTarget box = RewardTarget::from_text(kBox);
  RewardConfig cfg;
  cfg.cd_samples = 256;
  const std::vector<RewardTarget> four(4, box);
  const std::vector<std::string> preds = {wrap_output(kBox), wrap_output(kBox), wrap_output(kBox), wrap_output("rect 10;;;")};
  std::vector<SampleMetrics> per;
  const MetricsTable m = evaluate_dataset(preds, four, cfg, 1, &per);
  c.expect(m.exec_percent == 75.0, "3 of 4 exec " + fmt("%.4f", m.exec_percent));
  c.expect(near(m.iou_percent, 75.0, 1e-12), "3 of 4 iou " + fmt("%.4f", m.iou_percent));
  c.expect(per.size() == 4 && per[3].cd == box.bbox_diagonal, "failure cd is the diagonal");
  c.expect(near(m.mean_cd, box.bbox_diagonal / 4, 1e-12), "mean cd with one failure");
  c.expect(m.median_cd == 0.0, "median cd with one failure");
  cfg.failure_cd = FailureCdPolicy::Exclude;
  const MetricsTable ex = evaluate_dataset(preds, four, cfg, 1);
  c.expect(ex.exec_percent == 75.0 && ex.mean_cd == 0.0, "exclude policy");

  const std::vector<RewardTarget> targets = {
      box, RewardTarget::from_text("workplane YZ (1,0,0); circle 2; extrude 3; hole (0,0) 0.5 through;")};
  const std::vector<std::string> ident = {wrap_output(emit(targets[0].program)), wrap_output(emit(targets[1].program))};
  cfg.failure_cd = FailureCdPolicy::GtDiagonal;
  const MetricsTable id = evaluate_dataset(ident, targets, cfg, 5);
  c.expect(id.iou_percent == 100.0 && id.mean_cd == 0.0 && id.median_cd == 0.0 && id.exec_percent == 100.0,
           "identity table " + id.csv());
  c.note("identity " + id.csv() + ", mixed " + m.csv());
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "reward and cadlang arithmetic, gating on 1000 fuzzed outputs", 30, reward_suite},
      {2, "voxel IoU vs closed-form boxes, box-minus-cylinder volume", 60, geometry_suite},
      {3, "finite-difference gradient checks", 0, gradient_suite},
      {4, "advantage centering and buffer admission frequencies", 0, statistics_suite},
      {5, "1000-record dataset self-consistency", 300, dataset_suite},
      {6, "toy multi-expert learning signal and buffer ablation", 300, learning_suite},
      {7, "metric table arithmetic", 0, metrics_suite},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0) c.expect(secs < cr.budget_s, "runtime " + fmt("%.1f", secs) + " s over budget");
    const bool ok = c.ok();
    failed += ok ? 0 : 1;
    std::printf("%s [%d] %s (%.1f s): %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, secs, c.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
