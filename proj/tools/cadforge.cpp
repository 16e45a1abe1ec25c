// cadforge command-line front end: gen, render, reward, eval, train-toy, inspect.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cadforge/cadforge.hpp"

namespace fs = std::filesystem;
using namespace cadforge;

namespace {

constexpr std::uint64_t kDefaultSeed = 1234;

/// Bad input or arguments: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RewardFlags {
  RewardConfig cfg;
  std::string failure_cd = "diagonal";

  void add(CLI::App* app) {
    app->add_option("--lambda-format", cfg.lambda_format, "Format gate weight")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda-exec", cfg.lambda_exec, "Executability gate weight")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda-iou", cfg.lambda_iou, "IoU weight")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda-plane", cfg.lambda_plane, "Work-plane weight")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", cfg.beta, "Origin-deviation penalty")->check(CLI::NonNegativeNumber);
    app->add_option("--gamma", cfg.gamma, "Axis-deviation penalty")->check(CLI::NonNegativeNumber);
    app->add_option("--grid", cfg.grid_resolution, "Voxels along the longest axis")->check(CLI::Range(8, 512));
    app->add_option("--cd-samples", cfg.cd_samples, "Surface samples per solid for chamfer distance")
        ->check(CLI::Range(1, 100000));
    app->add_option("--failure-cd", failure_cd, "CD of non-executable samples: diagonal or exclude")
        ->check(CLI::IsMember({"diagonal", "exclude"}));
  }

  RewardConfig resolve() const {
    RewardConfig c = cfg;
    c.failure_cd = failure_cd == "exclude" ? FailureCdPolicy::Exclude : FailureCdPolicy::GtDiagonal;
    c.validate();
    return c;
  }
};

void require_record(const fs::path& dir) {
  if (!fs::is_directory(dir) || !fs::exists(dir / "record.json"))
    throw UsageError("not a record directory: " + dir.string());
}

DatasetRecord load_record(const fs::path& dir) {
  require_record(dir);
  return read_record(dir);
}

nlohmann::json breakdown_json(const RewardBreakdown& b) {
  return {{"r_format", b.r_format}, {"r_exec", b.r_exec},   {"r_iou", b.r_iou},
          {"dis_ori", b.dis_ori},   {"dis_ori_raw", b.dis_ori_raw}, {"dis_vec", b.dis_vec},
          {"r_plane", b.r_plane},   {"total", b.total},     {"diagnostic", diagnostic_name(b.diagnostic)}};
}

std::string with_svg_seed(std::string svg, std::uint64_t seed) {
  const std::size_t pos = svg.find('>', svg.find("<svg"));
  if (pos != std::string::npos) svg.insert(pos + 1, "\n<desc>seed=" + std::to_string(seed) + "</desc>");
  return svg;
}

std::string with_dxf_seed(const std::string& dxf, std::uint64_t seed) {
  return "999\nseed=" + std::to_string(seed) + "\n" + dxf;
}

// gen ------------------------------------------------------------------------------------

struct GenFlags {
  std::size_t n = 0;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  GenConfig cfg;
  std::vector<std::string> primitives;
  std::vector<std::string> modifiers;
  bool cot = false;
  bool no_modifiers = false;
};

int cmd_gen(const GenFlags& f) {
  if (f.n == 0) throw UsageError("--n must be >= 1");
  GenConfig cfg = f.cfg;
  cfg.seed = f.seed;
  if (!f.primitives.empty()) {
    static const std::map<std::string, PrimitiveKind> names{{"rect", PrimitiveKind::Rect},
                                                            {"circle", PrimitiveKind::Circle},
                                                            {"polygon", PrimitiveKind::Polygon},
                                                            {"polyline", PrimitiveKind::Polyline}};
    cfg.primitive_weights.clear();
    for (const auto& p : f.primitives) cfg.primitive_weights[names.at(p)] = 1.0 / static_cast<double>(f.primitives.size());
  }
  if (f.no_modifiers) {
    cfg.modifier_weights.clear();
  } else if (!f.modifiers.empty()) {
    static const std::map<std::string, ModifierKind> names{
        {"hole", ModifierKind::Hole}, {"chamfer", ModifierKind::Chamfer}, {"cut", ModifierKind::Cut}};
    cfg.modifier_weights.clear();
    for (const auto& m : f.modifiers) cfg.modifier_weights[names.at(m)] = 1.0 / static_cast<double>(f.modifiers.size());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  RecordOptions opt;
  if (f.cot) opt.cot_provider = template_cot_provider();
  const Manifest m = generate_dataset(f.n, cfg, f.out, opt);
  std::cout << (fs::path(f.out) / "manifest.json").string() << "\n";
  std::cerr << "generated " << m.records.size() << " records, seed " << f.seed << "\n";
  return 0;
}

// render ---------------------------------------------------------------------------------

int cmd_render(const std::string& record_dir, const std::string& out) {
  const DatasetRecord r = load_record(record_dir);
  fs::create_directories(out);
  write_text_file(fs::path(out) / "views.svg", with_svg_seed(to_svg(r.drawing), r.seed));
  write_text_file(fs::path(out) / "views.dxf", with_dxf_seed(to_dxf(r.drawing), r.seed));
  std::cout << (fs::path(out) / "views.svg").string() << "\n" << (fs::path(out) / "views.dxf").string() << "\n";
  return 0;
}

// reward ---------------------------------------------------------------------------------

int cmd_reward(const std::string& prediction, const std::string& record_dir, const RewardFlags& rf) {
  if (!fs::is_regular_file(prediction)) throw UsageError("prediction file not found: " + prediction);
  const DatasetRecord r = load_record(record_dir);
  const RewardConfig cfg = rf.resolve();
  const RewardBreakdown b = total_reward(read_text_file(prediction), r.target(), cfg);
  nlohmann::json j = breakdown_json(b);
  j["record"] = r.id;
  j["seed"] = r.seed;
  std::cout << j.dump() << "\n";
  return 0;
}

// eval -----------------------------------------------------------------------------------

int cmd_eval(const std::string& predictions, const std::string& dataset, const RewardFlags& rf, std::uint64_t seed,
             const std::string& out, bool pretty) {
  if (!fs::is_directory(predictions)) throw UsageError("predictions directory not found: " + predictions);
  if (!fs::is_directory(dataset)) throw UsageError("dataset directory not found: " + dataset);
  const RewardConfig cfg = rf.resolve();
  std::map<std::string, fs::path> records;
  for (const fs::path& d : record_dirs(dataset)) records[d.filename().string()] = d;
  std::map<std::string, fs::path> preds;
  for (const auto& e : fs::directory_iterator(predictions))
    if (e.is_regular_file() && e.path().extension() == ".txt") preds[e.path().stem().string()] = e.path();
  if (records.empty()) throw UsageError("dataset has no records: " + dataset);
  // First id (in sorted order) present on one side only.
  auto ri = records.begin();
  auto pi = preds.begin();
  while (ri != records.end() || pi != preds.end()) {
    if (pi == preds.end() || (ri != records.end() && ri->first < pi->first))
      throw UsageError("mismatched ids: record " + ri->first + " has no prediction");
    if (ri == records.end() || pi->first < ri->first)
      throw UsageError("mismatched ids: prediction " + pi->first + " has no record");
    ++ri;
    ++pi;
  }
  std::vector<std::string> texts;
  std::vector<RewardTarget> targets;
  std::vector<std::string> ids;
  for (const auto& [id, dir] : records) {
    const DatasetRecord r = read_record(dir);
    ids.push_back(id);
    targets.push_back(r.target());
    texts.push_back(read_text_file(preds.at(id)));
  }
  std::vector<SampleMetrics> per_sample;
  const MetricsTable t = evaluate_dataset(texts, targets, cfg, seed, &per_sample);
  std::cout << "iou_percent,mean_cd,median_cd,exec_percent,samples,seed\n" << t.csv() << "," << seed << "\n";
  if (pretty) std::cerr << t.pretty();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream os(fs::path(out) / "per_sample.jsonl", std::ios::binary);
    for (std::size_t i = 0; i < per_sample.size(); ++i) {
      nlohmann::json j = breakdown_json(per_sample[i].reward);
      j["id"] = ids[i];
      j["cd"] = per_sample[i].cd_counted ? nlohmann::json(per_sample[i].cd) : nlohmann::json(nullptr);
      j["seed"] = seed;
      os << j.dump() << "\n";
    }
  }
  return 0;
}

// train-toy ------------------------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  std::size_t curriculum = 20;
  std::size_t max_records = 0;
  ToyRunConfig run;
  std::string admission = "k_over_g";
};

int cmd_train_toy(TrainFlags f) {
  if (f.out.empty()) throw UsageError("--out is required");
  f.run.schedule.seed = f.seed;
  f.run.schedule.admission = f.admission == "constant" ? AdmissionRule::ConstantKOverG : AdmissionRule::FailureFraction;
  std::vector<TrainItem> items;
  if (f.data.empty()) {
    items = make_curriculum(f.curriculum, curriculum_config(), f.run.experts);
  } else {
    if (!fs::is_directory(f.data)) throw UsageError("dataset directory not found: " + f.data);
    std::size_t i = 0;
    for (const fs::path& d : record_dirs(f.data)) {
      if (f.max_records && i == f.max_records) break;
      try {
        items.push_back(TrainItem::from_record(read_record(d), i, f.run.experts));
      } catch (const TokenizeError& e) {
        throw UsageError(d.filename().string() + ": " + e.what());
      }
      ++i;
    }
    if (items.empty()) throw UsageError("dataset has no records: " + f.data);
  }
  try {
    f.run.schedule.validate(items.size());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  fs::create_directories(f.out);
  const fs::path log_path = fs::path(f.out) / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  nlohmann::json header = {{"phase", "config"}, {"seed", f.seed}, {"records", items.size()}, {"run", f.run.to_json()}};
  log << header.dump() << "\n";

  std::optional<ToyRunResult> run;
  try {
    run = run_toy(items, f.run, {}, [&](const nlohmann::json& j) { log << j.dump() << "\n"; });
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ToyRunResult& res = *run;
  nlohmann::json summary = {{"phase", "summary"},
                            {"seed", f.seed},
                            {"iterations", res.train.iterations},
                            {"pretrain_loss", res.pretrain_loss},
                            {"initial", res.train.initial.to_json()},
                            {"final", res.train.final.to_json()},
                            {"buffer_sizes", res.train.buffer_sizes}};
  log << summary.dump() << "\n";

  const fs::path ckpt = fs::path(f.out) / "checkpoint.bin";
  std::ofstream cs(ckpt, std::ios::binary);
  nlohmann::json cfg = header;
  cfg.erase("phase");
  save_checkpoint(cs, res.policy, cfg);

  std::printf("seed %llu, %d iterations\n", static_cast<unsigned long long>(f.seed), res.train.iterations);
  std::printf("initial mean reward %.4f (exec %.3f)\n", res.train.initial.mean_reward, res.train.initial.exec_rate);
  std::printf("final   mean reward %.4f (exec %.3f)\n", res.train.final.mean_reward, res.train.final.exec_rate);
  std::printf("buffer sizes:");
  for (std::size_t b : res.train.buffer_sizes) std::printf(" %zu", b);
  std::printf("\nlog %s\ncheckpoint %s\n", log_path.string().c_str(), ckpt.string().c_str());
  return 0;
}

// inspect --------------------------------------------------------------------------------

int cmd_inspect(const std::string& record_dir, bool json) {
  const DatasetRecord r = load_record(record_dir);
  if (json) {
    std::cout << record_json(r).dump(2) << "\n";
    return 0;
  }
  const auto v3 = [](Vec3 v) {
    return "(" + format_number(v.x) + ", " + format_number(v.y) + ", " + format_number(v.z) + ")";
  };
  std::cout << "record   " << r.id << "\nseed     " << r.seed << "\n";
  std::cout << "frame    origin " << v3(r.frame.origin) << " x " << v3(r.frame.x_axis) << " y " << v3(r.frame.y_axis) << "\n";
  std::cout << "diagonal " << format_number(r.bbox_diagonal) << "\n\nprogram\n";
  std::istringstream lines(r.program_text);
  for (std::string line; std::getline(lines, line);) std::cout << "  " << line << "\n";
  std::cout << "\nannotations\n";
  for (const Annotation& a : r.drawing.annotations)
    std::cout << "  " << view_name(a.view) << "  " << a.label << "  (" << a.kind << " " << format_number(a.value) << ")\n";
  for (const DrawingView& v : r.drawing.views)
    std::cout << "view " << view_name(v.kind) << ": " << v.loops.size() << " loop(s), area " << format_number(v.area()) << "\n";
  for (const auto& [e, text] : r.cot) std::cout << "cot[" << e << "] " << text << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric CAD dataset, reward and toy multi-expert RL tools"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  const auto add_config = [](CLI::App* sub) {
    sub->set_config("--config", "", "Flat key=value file; flags override it");
  };
  const auto add_seed = [](CLI::App* sub, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "Master seed")->envname("CADFORGE_SEED")->capture_default_str();
  };

  GenFlags gen;
  CLI::App* g = app.add_subcommand("gen", "Generate a dataset of records");
  add_config(g);
  g->add_option("--n", gen.n, "Number of records")->required();
  add_seed(g, gen.seed);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--min-statements", gen.cfg.min_statements, "Minimum statements per program")->capture_default_str();
  g->add_option("--max-statements", gen.cfg.max_statements, "Maximum statements per program")->capture_default_str();
  g->add_option("--max-pairs", gen.cfg.max_pairs, "Maximum sketch/extrude pairs")->check(CLI::Range(1, 3))->capture_default_str();
  g->add_option("--max-modifiers", gen.cfg.max_modifiers, "Maximum modifiers")->check(CLI::Range(0, 3))->capture_default_str();
  g->add_option("--primitives", gen.primitives, "Allowed sketch kinds")
      ->check(CLI::IsMember({"rect", "circle", "polygon", "polyline"}))
      ->delimiter(',');
  g->add_option("--modifiers", gen.modifiers, "Allowed modifier kinds")
      ->check(CLI::IsMember({"hole", "chamfer", "cut"}))
      ->delimiter(',');
  g->add_flag("--no-modifiers", gen.no_modifiers, "Disable modifiers");
  g->add_flag("--cot", gen.cot, "Fill reasoning slots with the template narration");

  std::string render_record, render_out;
  CLI::App* rd = app.add_subcommand("render", "Write the annotated views of a record");
  add_config(rd);
  rd->add_option("record", render_record, "Record directory")->required();
  rd->add_option("--out", render_out, "Output directory")->required();

  std::string reward_pred, reward_record;
  RewardFlags reward_flags;
  CLI::App* rw = app.add_subcommand("reward", "Score one prediction against a record");
  add_config(rw);
  rw->add_option("prediction", reward_pred, "Prediction text file")->required();
  rw->add_option("record", reward_record, "Record directory")->required();
  reward_flags.add(rw);

  std::string eval_preds, eval_data, eval_out;
  std::uint64_t eval_seed = kDefaultSeed;
  bool eval_pretty = false;
  RewardFlags eval_flags;
  CLI::App* ev = app.add_subcommand("eval", "Dataset metrics for a directory of <id>.txt predictions");
  add_config(ev);
  ev->add_option("predictions", eval_preds, "Predictions directory")->required();
  ev->add_option("dataset", eval_data, "Dataset directory")->required();
  ev->add_option("--out", eval_out, "Directory for per_sample.jsonl");
  ev->add_flag("--pretty", eval_pretty, "Print a table on stderr");
  add_seed(ev, eval_seed);
  eval_flags.add(ev);

  TrainFlags tf;
  CLI::App* tr = app.add_subcommand("train-toy", "Toy multi-expert RL on a dataset or the built-in curriculum");
  add_config(tr);
  tr->add_option("--data", tf.data, "Dataset directory (default: generated curriculum)");
  tr->add_option("--curriculum", tf.curriculum, "Curriculum size when --data is absent")->check(CLI::Range(1, 1000))->capture_default_str();
  tr->add_option("--max-records", tf.max_records, "Use at most this many records (0 = all)");
  tr->add_option("--out", tf.out, "Output directory for log and checkpoint")->required();
  add_seed(tr, tf.seed);
  tr->add_option("--experts", tf.run.experts, "Number of experts N")->check(CLI::Range(1, 16))->capture_default_str();
  tr->add_option("--max-len", tf.run.max_length, "Token cap per sample")->check(CLI::Range(8, 512))->capture_default_str();
  tr->add_option("--pretrain-epochs", tf.run.pretrain_epochs, "Warm-start epochs")->check(CLI::Range(0, 1000))->capture_default_str();
  tr->add_option("--pretrain-lr", tf.run.pretrain_lr, "Warm-start learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  Schedule& s = tf.run.schedule;
  tr->add_option("--parts", s.parts, "Number of parts M")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--epochs", s.epochs, "RL passes per part")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--G", s.G, "Rollouts per expert")->check(CLI::Range(2, 64))->capture_default_str();
  tr->add_option("--K", s.K, "Buffer threshold (K >= G disables the buffer)")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--tau", s.tau, "Correctness threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  tr->add_option("--lambda-kl", s.lambda_kl, "Collaborative KL weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--lr", s.lr, "RL learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--sft-lr", s.sft_lr, "Buffer SFT learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--sft-epochs", s.sft_epochs, "Buffer SFT passes")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--temperature", s.temperature, "Sampling temperature")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--buffer-capacity", s.buffer_capacity, "Buffer capacity")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--eval-samples", s.eval_samples, "Samples per (expert, input) in evaluation passes")->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_flag("--normalize-advantages", s.normalize_advantages, "Divide advantages by the group standard deviation");
  tr->add_option("--admission", tf.admission, "Buffer admission: k_over_g or constant")
      ->check(CLI::IsMember({"k_over_g", "constant"}))
      ->capture_default_str();

  std::string inspect_record;
  bool inspect_json = false;
  CLI::App* in = app.add_subcommand("inspect", "Pretty-print a record");
  add_config(in);
  in->add_option("record", inspect_record, "Record directory")->required();
  in->add_flag("--json", inspect_json, "Print record.json instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (rd->parsed()) return cmd_render(render_record, render_out);
    if (rw->parsed()) return cmd_reward(reward_pred, reward_record, reward_flags);
    if (ev->parsed()) return cmd_eval(eval_preds, eval_data, eval_flags, eval_seed, eval_out, eval_pretty);
    if (tr->parsed()) return cmd_train_toy(tf);
    if (in->parsed()) return cmd_inspect(inspect_record, inspect_json);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
