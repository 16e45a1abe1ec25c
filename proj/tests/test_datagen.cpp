#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <set>

#include "cadforge/datagen.hpp"

using namespace cadforge;
namespace fs = std::filesystem;

namespace {

GenConfig box_only() {
  GenConfig cfg;
  cfg.primitive_weights = {{PrimitiveKind::Rect, 1.0}};
  cfg.modifier_weights.clear();
  cfg.max_modifiers = 0;
  cfg.max_pairs = 1;
  cfg.max_statements = 3;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cadforge_datagen_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  return out;
}

}  // namespace

TEST(GenProgram, DeterministicPerSeed) {
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 50; ++s) EXPECT_EQ(gen_program(cfg, s), gen_program(cfg, s));
  EXPECT_NE(emit(gen_program(cfg, 1)), emit(gen_program(cfg, 2)));
}

TEST(GenProgram, BoxOnlyConfig) {
  const GenConfig cfg = box_only();
  for (std::uint64_t s = 0; s < 100; ++s) {
    const CadProgram p = gen_program(cfg, s);
    ASSERT_EQ(p.statements.size(), 3u);
    EXPECT_TRUE(std::holds_alternative<stmt::Workplane>(p.statements[0]));
    EXPECT_TRUE(std::holds_alternative<stmt::Rect>(p.statements[1]));
    EXPECT_TRUE(std::holds_alternative<stmt::Extrude>(p.statements[2]));
  }
}

TEST(GenProgram, ThousandSeedsAllExecutable) {
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const CadProgram p = gen_program(cfg, s);
    const FilterResult f = filter_stage1(p);
    ASSERT_TRUE(f.pass) << s << ": " << f.message << "\n" << emit(p);
  }
}

TEST(GenProgram, RespectsStatementAndModifierBounds) {
  GenConfig cfg;
  cfg.max_statements = 8;
  cfg.max_modifiers = 1;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const CadProgram p = gen_program(cfg, s);
    EXPECT_GE(static_cast<int>(p.statements.size()), cfg.min_statements);
    EXPECT_LE(static_cast<int>(p.statements.size()), cfg.max_statements);
    EXPECT_LE(modifier_count(p), cfg.max_modifiers);
  }
}

TEST(GenProgram, ValuesOnGrid) {
  GenConfig cfg;
  const std::regex number(R"(-?\d+(\.\d+)?)");
  for (std::uint64_t s = 0; s < 200; ++s) {
    const std::string text = emit(gen_program(cfg, s));
    for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator(); ++it) {
      const double v = std::stod(it->str());
      EXPECT_EQ(std::fmod(std::abs(v), 0.25), 0.0) << it->str() << " in\n" << text;
    }
  }
}

TEST(GenProgram, InvalidConfigRejected) {
  GenConfig cfg;
  cfg.min_statements = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  GenConfig w;
  w.primitive_weights = {{PrimitiveKind::Rect, 0.5}};
  EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(GenProgram, CoverageOverFiveHundredSeeds) {
  GenConfig cfg;
  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 500; ++s)
    for (const auto& k : program_kinds(gen_program(cfg, s))) seen.insert(k);
  for (const char* k : {"plane_XY", "plane_YZ", "plane_XZ", "rect", "circle", "polygon", "polyline", "hole", "chamfer", "cut"})
    EXPECT_TRUE(seen.count(k)) << k;
}

TEST(Filter, Examples) {
  EXPECT_TRUE(filter_stage1_text("workplane XY (0,0,0); rect 10 6; extrude 4;").pass);
  const FilterResult empty =
      filter_stage1_text("workplane XY (0,0,0); rect 4 4; extrude 2; workplane XY (0,0,0); rect 6 6; cut 2;");
  EXPECT_FALSE(empty.pass);
  EXPECT_EQ(empty.diagnostic, Diagnostic::EmptySolid);
  std::string corrupted = emit(gen_program(GenConfig{}, 4));
  corrupted.replace(corrupted.find(';'), 1, "(");
  const FilterResult bad = filter_stage1_text(corrupted);
  EXPECT_FALSE(bad.pass);
  EXPECT_EQ(bad.diagnostic, Diagnostic::Syntax);
}

TEST(Record, BoxAnnotationsAndFrame) {
  const CadProgram p = parse("workplane XY (1,2,3); rect 10 6; extrude 4;");
  const DatasetRecord r = build_record(p, 9, "box");
  std::set<std::string> kinds;
  for (const Annotation& a : r.drawing.annotations) kinds.insert(a.kind);
  EXPECT_EQ(kinds, (std::set<std::string>{"width", "height", "depth"}));
  EXPECT_EQ(r.drawing.annotations.size(), 3u);
  EXPECT_EQ(r.frame, workplane_frame(p));
}

TEST(Record, SelfRewardIsOne) {
  GenConfig cfg;
  RecordOptions opt;
  opt.cot_provider = template_cot_provider();
  for (std::uint64_t s = 0; s < 30; ++s) {
    const DatasetRecord r = build_record(gen_program(cfg, s), s, record_id(s), opt);
    const RewardTarget t = r.target();
    for (int e = 0; e <= 3; ++e) EXPECT_EQ(total_reward(r.wrapped(e), t).total, 1.0) << s;
  }
}

TEST(Record, AnnotationFaithfulness) {
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const DatasetRecord r = build_record(gen_program(cfg, s), s);
    const Vec3 ext = r.target().solid.bounds().extent();
    for (const Annotation& a : r.drawing.annotations) {
      const bool verbatim = r.program_text.find(format_number(a.value)) != std::string::npos;
      const bool extent = std::abs(a.value - ext.x) <= 1e-6 || std::abs(a.value - ext.y) <= 1e-6 ||
                          std::abs(a.value - ext.z) <= 1e-6;
      EXPECT_TRUE(verbatim || extent) << a.kind << " " << a.value << "\n" << r.program_text;
    }
  }
}

TEST(Record, ExpertCotStylesDiffer) {
  const CadProgram p = parse("workplane XY (0,0,0); rect 10 6; extrude 4; hole (0,0) 1;");
  EXPECT_EQ(template_cot(1, p), "step workplane step rect step extrude step hole");
  EXPECT_EQ(template_cot(2, p), "plan workplane rect extrude hole check");
  EXPECT_EQ(template_cot(3, p), "view dim hole dim extrude dim rect dim workplane");
}

TEST(Record, WriteReadRoundTrip) {
  const fs::path dir = scratch("record");
  RecordOptions opt;
  opt.cot_provider = template_cot_provider();
  const DatasetRecord r = build_record(gen_program(GenConfig{}, 12), 12, "rec_x", opt);
  write_record(r, dir);
  for (const char* f : {"program.cad", "record.json", "views.svg", "views.dxf"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const DatasetRecord back = read_record(dir);
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_EQ(back.program, r.program);
  EXPECT_EQ(back.frame, r.frame);
  EXPECT_EQ(back.cot, r.cot);
  EXPECT_DOUBLE_EQ(back.bbox_diagonal, r.bbox_diagonal);
  const auto j = nlohmann::json::parse(read_text_file(dir / "record.json"));
  for (const char* k : {"id", "seed", "program", "frame", "bbox_diagonal", "annotations", "cot"}) EXPECT_TRUE(j.contains(k)) << k;
  fs::remove_all(dir);
}

TEST(Dataset, ByteIdenticalRerunAndManifest) {
  const fs::path a = scratch("a");
  const fs::path b = scratch("b");
  GenConfig cfg;
  cfg.max_statements = 10;
  RecordOptions opt;
  opt.cot_provider = template_cot_provider();
  const Manifest m = generate_dataset(100, cfg, a, opt);
  generate_dataset(100, cfg, b, opt);
  EXPECT_EQ(tree_contents(a), tree_contents(b));
  EXPECT_EQ(m.records.size(), 100u);
  for (const auto& [stmts, count] : m.statement_histogram) {
    EXPECT_GE(stmts, cfg.min_statements);
    EXPECT_LE(stmts, cfg.max_statements);
    EXPECT_GT(count, 0);
  }
  const auto dirs = record_dirs(a);
  ASSERT_EQ(dirs.size(), 100u);
  for (const auto& d : dirs) EXPECT_TRUE(filter_stage1_text(read_text_file(d / "program.cad")).pass) << d;
  EXPECT_THROW(generate_dataset(0, cfg, a), std::invalid_argument);
  fs::remove_all(a);
  fs::remove_all(b);
}
