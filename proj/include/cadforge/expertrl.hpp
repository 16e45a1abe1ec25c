#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cadforge/datagen.hpp"
#include "cadforge/metrics.hpp"
#include "cadforge/policy.hpp"
#include "cadforge/rewards.hpp"
#include "cadforge/tokens.hpp"

namespace cadforge {

struct Rollout {
  TokenSeq tokens;
  std::string text;
  double logprob = 0;
  bool truncated = false;
};

struct RolloutGroup {
  ExpertProfile expert;
  std::size_t input = 0;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;     // filled by the caller
  std::vector<double> advantages;  // filled by advantages()

  std::size_t size() const { return rollouts.size(); }
  double mean_reward() const {
    if (rewards.empty()) throw std::logic_error("RolloutGroup: rewards not filled");
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  }
};

/// G samples for one (expert, input); sample g uses a seed derived from (seed, g).
inline RolloutGroup sample_group(const PolicyInterface& policy, const ExpertProfile& expert, std::size_t input, int G,
                                 double temperature, std::uint64_t seed) {
  if (G < 2) throw std::invalid_argument("sample_group: G must be >= 2");
  if (!(temperature > 0.0)) throw std::invalid_argument("sample_group: temperature must be > 0");
  RolloutGroup group;
  group.expert = expert;
  group.input = input;
  for (int g = 0; g < G; ++g) {
    SampledSequence s = policy.sample(expert, input, temperature, sample_seed(seed, static_cast<std::uint64_t>(g)));
    Rollout r;
    r.text = detokenize(s.tokens);
    r.tokens = std::move(s.tokens);
    r.logprob = s.logprob;
    r.truncated = s.truncated;
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

/// A_g = R_g - mean(R). With `normalize`, additionally divided by the population
/// standard deviation (zero when all rewards are equal).
inline std::vector<double> advantages(std::span<const double> rewards, bool normalize = false) {
  if (rewards.size() < 2) throw std::invalid_argument("advantages: G must be >= 2");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  std::vector<double> a;
  a.reserve(rewards.size());
  for (double r : rewards) a.push_back(r - mean);
  if (normalize) {
    double var = 0.0;
    for (double v : a) var += v * v;
    const double sd = std::sqrt(var / n);
    for (double& v : a) v = sd > 0.0 ? v / sd : 0.0;
  }
  return a;
}

/// -(1/G) * sum_g max(A_g, 0) * logprob(output_g). Adds weight * gradient into `grad`.
inline double grpo_loss(const PolicyInterface& policy, const RolloutGroup& group, std::vector<double>* grad = nullptr,
                        double weight = 1.0) {
  if (group.advantages.size() != group.rollouts.size()) throw std::logic_error("grpo_loss: advantages not filled");
  const double inv_g = 1.0 / static_cast<double>(group.rollouts.size());
  double loss = 0.0;
  for (std::size_t g = 0; g < group.rollouts.size(); ++g) {
    const double a = std::max(group.advantages[g], 0.0);
    if (a == 0.0) continue;
    const auto& seq = group.rollouts[g].tokens;
    loss -= inv_g * a * policy.logprob(seq, group.expert, group.input);
    if (grad) policy.backprop_logprob(seq, group.expert, group.input, -weight * inv_g * a, *grad);
  }
  return loss;
}

struct BestWorst {
  int best = 1;
  int worst = 2;
  bool all_tied = false;  // every expert has the same mean; collaborative KL is skipped
};

/// Expert with the highest and (among the others) the lowest mean reward; ties go to
/// the lower expert id.
inline BestWorst select_best_worst(std::span<const RolloutGroup> groups) {
  if (groups.size() < 2) throw std::invalid_argument("select_best_worst: need at least two experts");
  std::vector<std::pair<int, double>> means;
  for (const auto& g : groups) means.emplace_back(g.expert.id, g.mean_reward());
  std::sort(means.begin(), means.end());
  BestWorst out;
  std::size_t b = 0;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i].second > means[b].second) b = i;
  std::optional<std::size_t> w;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (i == b) continue;
    if (!w || means[i].second < means[*w].second) w = i;
  }
  out.best = means[b].first;
  out.worst = means[*w].first;
  out.all_tied = std::all_of(means.begin(), means.end(), [&](const auto& m) { return m.second == means[0].second; });
  return out;
}

/// Forward KL(p || q) = sum_v p_v ln(p_v / q_v).
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v)
    if (p[v] > 0.0) kl += p[v] * std::log(p[v] / q[v]);
  return kl;
}

/// Token-level KL along `response`: sum_t KL(pi(.|prefix_t, worst) || pi(.|prefix_t, best)).
/// The best-expert distribution is a constant target; the gradient reaches only the
/// worst-expert logits.
inline double collab_kl_loss(const PolicyInterface& policy, std::span<const TokenId> response,
                             const ExpertProfile& best, const ExpertProfile& worst, std::size_t input,
                             std::vector<double>* grad = nullptr, double weight = 1.0) {
  double loss = 0.0;
  for (std::size_t t = 0; t < response.size(); ++t) {
    const auto prefix = response.first(t);
    const std::vector<double> p = policy.token_distribution(prefix, worst, input);
    const std::vector<double> q = policy.token_distribution(prefix, best, input);
    const double kl = kl_divergence(p, q);
    loss += kl;
    if (grad) {
      std::vector<double> d(p.size());
      for (std::size_t v = 0; v < p.size(); ++v)
        d[v] = p[v] > 0.0 ? weight * p[v] * (std::log(p[v]) - std::log(q[v]) - kl) : 0.0;
      policy.backprop_logits(prefix, worst, input, d, *grad);
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------------------
// Hard-negative buffer

enum class AdmissionRule {
  FailureFraction,  // probability k / G with k observed failures
  ConstantKOverG,   // probability K / G
};

struct BufferEntry {
  std::size_t input = 0;
  TokenSeq target;
  int expert = 1;
  double admission_probability = 1.0;
};

class EmptyBuffer : public std::logic_error {
 public:
  EmptyBuffer() : std::logic_error("hard-negative buffer is empty") {}
};

class HardNegativeBuffer {
 public:
  explicit HardNegativeBuffer(std::size_t capacity = 64, std::uint64_t seed = 0) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("buffer capacity must be >= 1");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<BufferEntry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  /// Insert, evicting the oldest entry when full.
  void push(BufferEntry e) {
    if (!(e.admission_probability > 0.0 && e.admission_probability <= 1.0))
      throw std::invalid_argument("admission probability must be in (0, 1]");
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.push_back(std::move(e));
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::size_t capacity_;
  std::deque<BufferEntry> entries_;
  std::mt19937_64 rng_;
};

/// With k responses below `tau` and k > K, admit the input with probability k/G (or K/G).
/// Returns true when an entry was added.
inline bool buffer_admit(HardNegativeBuffer& buffer, const RolloutGroup& group, int K, double tau, TokenSeq target,
                         AdmissionRule rule = AdmissionRule::FailureFraction) {
  if (group.rewards.size() != group.rollouts.size()) throw std::logic_error("buffer_admit: rewards not filled");
  const int G = static_cast<int>(group.rewards.size());
  const int k = static_cast<int>(std::count_if(group.rewards.begin(), group.rewards.end(), [&](double r) { return r < tau; }));
  if (k <= K) return false;
  const double p = rule == AdmissionRule::FailureFraction ? static_cast<double>(k) / G
                                                          : std::min(1.0, static_cast<double>(K) / G);
  if (!(p > 0.0)) return false;
  if (buffer.uniform() >= p) return false;
  buffer.push({group.input, std::move(target), group.expert.id, p});
  return true;
}

/// Mean over entries of -logprob(target | expert prompt, input).
inline double sft_loss(const PolicyInterface& policy, std::span<const BufferEntry> entries,
                       std::span<const ExpertProfile> experts, std::vector<double>* grad = nullptr,
                       double weight = 1.0) {
  if (entries.empty()) throw EmptyBuffer();
  const double inv = 1.0 / static_cast<double>(entries.size());
  double loss = 0.0;
  for (const BufferEntry& e : entries) {
    const auto it = std::find_if(experts.begin(), experts.end(), [&](const ExpertProfile& p) { return p.id == e.expert; });
    if (it == experts.end()) throw std::invalid_argument("sft_loss: unknown expert id " + std::to_string(e.expert));
    loss -= inv * policy.logprob(e.target, *it, e.input);
    if (grad) policy.backprop_logprob(e.target, *it, e.input, -weight * inv, *grad);
  }
  return loss;
}

inline double sft_loss(const PolicyInterface& policy, const HardNegativeBuffer& buffer,
                       std::span<const ExpertProfile> experts, std::vector<double>* grad = nullptr,
                       double weight = 1.0) {
  const std::vector<BufferEntry> entries(buffer.entries().begin(), buffer.entries().end());
  return sft_loss(policy, entries, experts, grad, weight);
}

// ---------------------------------------------------------------------------------------
// Training

/// One training input: reward target plus the per-expert supervised sequence
/// (<think> reasoning </think> <code> program </code> EOS).
struct TrainItem {
  std::size_t input = 0;
  std::string id;
  RewardTarget target;
  std::vector<TokenSeq> expert_targets;  // index = expert id - 1

  static TrainItem from_record(const DatasetRecord& rec, std::size_t input, int experts) {
    TrainItem item;
    item.input = input;
    item.id = rec.id;
    item.target = rec.target();
    for (int e = 1; e <= experts; ++e) {
      const auto it = rec.cot.find(e);
      const std::string cot = it != rec.cot.end() && !it->second.empty() ? it->second : template_cot(e, rec.program);
      TokenSeq seq = tokenize(wrap_output(rec.program_text, cot));
      seq.push_back(vocab::kEos);
      item.expert_targets.push_back(std::move(seq));
    }
    return item;
  }
};

/// Records generated for the learning-signal run: single sketch/extrude programs with
/// at most one modifier (3 or 4 statements).
inline GenConfig curriculum_config(std::uint64_t seed = 7) {
  GenConfig cfg;
  cfg.min_statements = 3;
  cfg.max_statements = 4;
  cfg.max_pairs = 1;
  cfg.max_modifiers = 1;
  cfg.modifier_weights = {{ModifierKind::Hole, 0.6}, {ModifierKind::Chamfer, 0.4}};
  cfg.max_size = 12.0;
  cfg.max_depth = 8.0;
  cfg.offset_range = 4.0;
  cfg.seed = seed;
  return cfg;
}

inline std::vector<TrainItem> make_curriculum(std::size_t n, const GenConfig& cfg, int experts) {
  std::vector<TrainItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    CadProgram prog;
    std::uint64_t seed = 0;
    for (std::uint64_t sub = 0;; ++sub) {
      seed = sample_seed(cfg.seed, (static_cast<std::uint64_t>(i) << 8) + sub);
      try {
        prog = gen_program(cfg, seed);
        break;
      } catch (const GenerationExhausted&) {
        if (sub == 255) throw;
      }
    }
    RecordOptions opt;
    opt.cot_provider = template_cot_provider();
    opt.experts = experts;
    items.push_back(TrainItem::from_record(build_record(prog, seed, record_id(i), opt), i, experts));
  }
  return items;
}

struct Schedule {
  int parts = 2;    // M
  int epochs = 15;  // passes over each part
  int G = 4;
  int K = 2;  // admission threshold; K >= G disables the buffer
  double tau = 0.8;
  double lambda_kl = 0.1;
  double lr = 0.05;
  double temperature = 0.9;
  bool normalize_advantages = false;
  AdmissionRule admission = AdmissionRule::FailureFraction;
  std::size_t buffer_capacity = 64;
  int sft_epochs = 3;
  double sft_lr = 0.5;
  int eval_samples = 8;  // samples per (expert, input) in evaluation passes
  std::uint64_t seed = 0;

  void validate(std::size_t dataset_size) const {
    if (parts < 1) throw std::invalid_argument("schedule: parts must be >= 1");
    if (static_cast<std::size_t>(parts) > dataset_size)
      throw std::invalid_argument("schedule: " + std::to_string(parts) + " parts for " + std::to_string(dataset_size) +
                                  " records");
    if (epochs < 0 || sft_epochs < 0) throw std::invalid_argument("schedule: epochs must be >= 0");
    if (G < 2) throw std::invalid_argument("schedule: G must be >= 2");
    if (K < 0) throw std::invalid_argument("schedule: K must be >= 0");
    if (!(temperature > 0.0)) throw std::invalid_argument("schedule: temperature must be > 0");
    if (!(lr > 0.0) || sft_lr < 0.0 || lambda_kl < 0.0) throw std::invalid_argument("schedule: bad rates");
    if (eval_samples < 1) throw std::invalid_argument("schedule: eval samples must be >= 1");
    if (buffer_capacity < 1) throw std::invalid_argument("schedule: buffer capacity must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"parts", parts},
            {"epochs", epochs},
            {"G", G},
            {"K", K},
            {"tau", tau},
            {"lambda_kl", lambda_kl},
            {"lr", lr},
            {"temperature", temperature},
            {"normalize_advantages", normalize_advantages},
            {"admission", admission == AdmissionRule::FailureFraction ? "k_over_g" : "constant_k_over_g"},
            {"buffer_capacity", buffer_capacity},
            {"sft_epochs", sft_epochs},
            {"sft_lr", sft_lr},
            {"eval_samples", eval_samples},
            {"seed", seed}};
  }
};

/// Memoized total reward per (input, output text).
class RewardCache {
 public:
  explicit RewardCache(RewardConfig cfg = {}) : cfg_(cfg) {}

  const RewardBreakdown& get(const TrainItem& item, const std::string& text) {
    auto [it, inserted] = cache_.try_emplace(std::to_string(item.input) + '\x1f' + text);
    if (inserted) {
      it->second = total_reward(text, item.target, cfg_);
      it->second.program.reset();
    }
    return it->second;
  }

 private:
  RewardConfig cfg_;
  std::unordered_map<std::string, RewardBreakdown> cache_;
};

inline void score_group(RolloutGroup& group, const TrainItem& item, RewardCache& cache, std::vector<double>* iou = nullptr,
                        int* executed = nullptr) {
  group.rewards.clear();
  for (const Rollout& r : group.rollouts) {
    const RewardBreakdown& b = cache.get(item, r.text);
    group.rewards.push_back(b.total);
    if (iou) iou->push_back(b.r_exec > 0 ? b.r_iou : 0.0);
    if (executed && b.r_exec > 0) ++*executed;
  }
}

struct EvalStats {
  double mean_reward = 0;
  double mean_iou = 0;
  double exec_rate = 0;
  std::vector<double> expert_mean_reward;

  nlohmann::json to_json() const {
    return {{"mean_reward", mean_reward}, {"mean_iou", mean_iou}, {"exec_rate", exec_rate},
            {"expert_mean_reward", expert_mean_reward}};
  }
};

/// Sampled evaluation: `samples` outputs per (expert, input) at `temperature`.
inline EvalStats evaluate_policy(const PolicyInterface& policy, std::span<const TrainItem> items,
                                 std::span<const ExpertProfile> experts, int samples, double temperature,
                                 std::uint64_t seed, RewardCache& cache) {
  if (items.empty() || experts.empty()) throw std::invalid_argument("evaluate_policy: nothing to evaluate");
  EvalStats s;
  double total = 0, iou = 0;
  std::size_t n = 0, exec = 0;
  for (const ExpertProfile& e : experts) {
    double expert_total = 0;
    std::size_t expert_n = 0;
    for (const TrainItem& item : items) {
      for (int k = 0; k < samples; ++k) {
        const std::uint64_t sd = sample_seed(sample_seed(seed, item.input), static_cast<std::uint64_t>(e.id) * 1000 + k);
        const SampledSequence seq = policy.sample(e, item.input, temperature, sd);
        const RewardBreakdown& b = cache.get(item, detokenize(seq.tokens));
        total += b.total;
        expert_total += b.total;
        iou += b.r_exec > 0 ? b.r_iou : 0.0;
        exec += b.r_exec > 0 ? 1 : 0;
        ++n;
        ++expert_n;
      }
    }
    s.expert_mean_reward.push_back(expert_total / static_cast<double>(expert_n));
  }
  s.mean_reward = total / static_cast<double>(n);
  s.mean_iou = iou / static_cast<double>(n);
  s.exec_rate = static_cast<double>(exec) / static_cast<double>(n);
  return s;
}

/// Expert-tagged supervised warm start: SGD on -logprob(expert target) for every
/// (input, expert) pair, `epochs` times.
inline double pretrain(PolicyInterface& policy, std::span<const TrainItem> items, std::span<const ExpertProfile> experts,
                       int epochs, double lr) {
  double last = 0.0;
  std::vector<double> grad(policy.parameter_count(), 0.0);
  for (int ep = 0; ep < epochs; ++ep) {
    last = 0.0;
    for (const TrainItem& item : items) {
      for (const ExpertProfile& e : experts) {
        const TokenSeq& target = item.expert_targets.at(static_cast<std::size_t>(e.id - 1));
        std::fill(grad.begin(), grad.end(), 0.0);
        last -= policy.logprob(target, e, item.input);
        policy.backprop_logprob(target, e, item.input, -1.0, grad);
        policy.apply_gradient(grad, lr);
      }
    }
    last /= static_cast<double>(items.size() * experts.size());
  }
  return last;
}

struct TrainResult {
  std::vector<nlohmann::json> log;  // one object per line
  EvalStats initial;
  EvalStats final;
  std::vector<std::size_t> buffer_sizes;  // after each part's evaluation pass
  int iterations = 0;
};

/// Multi-expert RL over M parts: per part, GRPO plus collaborative KL updates, then an
/// evaluation pass that fills the hard-negative buffer, then SFT over the buffer.
/// Deterministic for a fixed schedule seed.
inline TrainResult train(PolicyInterface& policy, std::span<const TrainItem> items,
                         std::span<const ExpertProfile> experts, const Schedule& sch, const RewardConfig& reward_cfg = {},
                         const std::function<void(const nlohmann::json&)>& on_log = {}) {
  sch.validate(items.size());
  if (experts.empty()) throw std::invalid_argument("train: no experts");
  for (const TrainItem& item : items)
    if (item.expert_targets.size() < experts.size()) throw std::invalid_argument("train: item lacks expert targets");

  TrainResult res;
  RewardCache cache(reward_cfg);
  HardNegativeBuffer buffer(sch.buffer_capacity, sample_seed(sch.seed, 0xB0FFu));
  std::mt19937_64 order_rng(sample_seed(sch.seed, 0x5EEDu));
  std::vector<double> grad(policy.parameter_count(), 0.0);
  const auto emit_log = [&](nlohmann::json j) {
    if (on_log) on_log(j);
    res.log.push_back(std::move(j));
  };

  res.initial = evaluate_policy(policy, items, experts, sch.eval_samples, sch.temperature, sample_seed(sch.seed, 0xE0u), cache);

  // Contiguous near-equal parts.
  const std::size_t n = items.size();
  const std::size_t M = static_cast<std::size_t>(sch.parts);
  int iteration = 0;
  for (std::size_t part = 0; part < M; ++part) {
    const std::size_t lo = part * n / M, hi = (part + 1) * n / M;
    const std::span<const TrainItem> part_items = items.subspan(lo, hi - lo);

    for (int epoch = 0; epoch < sch.epochs; ++epoch) {
      std::vector<std::size_t> order(part_items.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), order_rng);
      for (std::size_t idx : order) {
        const TrainItem& item = part_items[idx];
        std::vector<RolloutGroup> groups;
        int executed = 0;
        for (const ExpertProfile& e : experts) {
          const std::uint64_t sd = sample_seed(sample_seed(sch.seed, static_cast<std::uint64_t>(iteration) + 1),
                                               static_cast<std::uint64_t>(e.id));
          RolloutGroup g = sample_group(policy, e, item.input, sch.G, sch.temperature, sd);
          score_group(g, item, cache, nullptr, &executed);
          g.advantages = advantages(g.rewards, sch.normalize_advantages);
          groups.push_back(std::move(g));
        }

        std::fill(grad.begin(), grad.end(), 0.0);
        double l_grpo = 0.0, l_kl = 0.0;
        for (const RolloutGroup& g : groups) l_grpo += grpo_loss(policy, g, &grad);

        nlohmann::json kl_info = nullptr;
        if (groups.size() >= 2) {
          const BestWorst bw = select_best_worst(groups);
          if (!bw.all_tied) {
            const RolloutGroup& bg = *std::find_if(groups.begin(), groups.end(), [&](const RolloutGroup& g) { return g.expert.id == bw.best; });
            const ExpertProfile& worst = *std::find_if(experts.begin(), experts.end(), [&](const ExpertProfile& e) { return e.id == bw.worst; });
            std::size_t best_idx = 0;
            for (std::size_t k = 1; k < bg.rewards.size(); ++k)
              if (bg.rewards[k] > bg.rewards[best_idx]) best_idx = k;
            if (bg.rewards[best_idx] >= sch.tau) {
              l_kl = collab_kl_loss(policy, bg.rollouts[best_idx].tokens, bg.expert, worst, item.input, &grad, sch.lambda_kl);
              kl_info = {{"best", bw.best}, {"worst", bw.worst}};
            }
          }
        }
        policy.apply_gradient(grad, sch.lr);

        nlohmann::json line;
        line["phase"] = "rl";
        line["iteration"] = iteration;
        line["part"] = part;
        line["input"] = item.input;
        std::vector<double> means;
        double total = 0;
        for (const RolloutGroup& g : groups) {
          means.push_back(g.mean_reward());
          total += g.mean_reward();
        }
        line["expert_mean_reward"] = means;
        line["mean_reward"] = total / static_cast<double>(groups.size());
        line["exec_rate"] = static_cast<double>(executed) / static_cast<double>(groups.size() * sch.G);
        line["buffer_size"] = buffer.size();
        line["loss"] = {{"grpo", l_grpo}, {"kl", l_kl}, {"kl_weighted", sch.lambda_kl * l_kl}, {"sft", 0.0}};
        line["kl_pair"] = kl_info;
        emit_log(std::move(line));
        ++iteration;
      }
    }

    // Evaluation pass on the same part fills the buffer.
    int admitted = 0;
    for (const TrainItem& item : part_items) {
      for (const ExpertProfile& e : experts) {
        const std::uint64_t sd = sample_seed(sample_seed(sch.seed, 0xA000u + part), item.input * 64 + static_cast<std::uint64_t>(e.id));
        RolloutGroup g = sample_group(policy, e, item.input, sch.G, sch.temperature, sd);
        score_group(g, item, cache);
        if (buffer_admit(buffer, g, sch.K, sch.tau, item.expert_targets[static_cast<std::size_t>(e.id - 1)], sch.admission))
          ++admitted;
      }
    }
    res.buffer_sizes.push_back(buffer.size());

    double l_sft = 0.0;
    if (!buffer.empty() && sch.sft_epochs > 0 && sch.sft_lr > 0.0) {
      const std::vector<BufferEntry> entries(buffer.entries().begin(), buffer.entries().end());
      l_sft = sft_loss(policy, entries, experts);
      for (int ep = 0; ep < sch.sft_epochs; ++ep) {
        for (const BufferEntry& entry : entries) {
          std::fill(grad.begin(), grad.end(), 0.0);
          sft_loss(policy, std::span<const BufferEntry>(&entry, 1), experts, &grad);
          policy.apply_gradient(grad, sch.sft_lr);
        }
      }
    }
    nlohmann::json line;
    line["phase"] = "buffer";
    line["iteration"] = iteration;
    line["part"] = part;
    line["admitted"] = admitted;
    line["buffer_size"] = buffer.size();
    line["loss"] = {{"grpo", 0.0}, {"kl", 0.0}, {"kl_weighted", 0.0}, {"sft", l_sft}};
    emit_log(std::move(line));
  }

  res.iterations = iteration;
  res.final = evaluate_policy(policy, items, experts, sch.eval_samples, sch.temperature, sample_seed(sch.seed, 0xE0u), cache);
  return res;
}

/// Complete toy run: expert-tagged warm start, then the RL schedule.
struct ToyRunConfig {
  int experts = 2;
  std::size_t max_length = 72;
  int pretrain_epochs = 8;
  double pretrain_lr = 0.5;
  Schedule schedule;

  nlohmann::json to_json() const {
    return {{"experts", experts},
            {"max_length", max_length},
            {"pretrain_epochs", pretrain_epochs},
            {"pretrain_lr", pretrain_lr},
            {"schedule", schedule.to_json()}};
  }
};

struct ToyRunResult {
  ToyPolicy policy;
  double pretrain_loss = 0;
  TrainResult train;
};

inline ToyRunResult run_toy(std::span<const TrainItem> items, const ToyRunConfig& cfg,
                            const RewardConfig& reward_cfg = {},
                            const std::function<void(const nlohmann::json&)>& on_log = {}) {
  if (items.empty()) throw std::invalid_argument("run_toy: empty dataset");
  if (cfg.pretrain_epochs < 0 || cfg.pretrain_lr < 0) throw std::invalid_argument("run_toy: bad pretrain settings");
  for (const TrainItem& item : items)
    for (const TokenSeq& t : item.expert_targets)
      if (t.size() > cfg.max_length)
        throw std::invalid_argument("run_toy: target of " + item.id + " has " + std::to_string(t.size()) +
                                    " tokens, above the length cap " + std::to_string(cfg.max_length));
  const std::vector<ExpertProfile> experts = default_experts(cfg.experts);
  ToyRunResult r{ToyPolicy(cfg.experts, items.size(), cfg.max_length), 0.0, {}};
  r.pretrain_loss = pretrain(r.policy, items, experts, cfg.pretrain_epochs, cfg.pretrain_lr);
  r.train = train(r.policy, items, experts, cfg.schedule, reward_cfg, on_log);
  return r;
}

// ---------------------------------------------------------------------------------------
// Checkpoints: "CFCK", u32 version, u32 config length, config JSON, u64 count, f64 values.

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(std::ostream& os, const ToyPolicy& policy, const nlohmann::json& config) {
  nlohmann::json cfg = config;
  cfg["experts"] = policy.experts();
  cfg["inputs"] = policy.inputs();
  cfg["max_length"] = policy.max_length();
  cfg["vocab"] = policy.vocab_size();
  const std::string text = cfg.dump();
  os.write("CFCK", 4);
  const auto put = [&](const auto& v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(kCheckpointVersion);
  put(static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put(static_cast<std::uint64_t>(policy.parameter_count()));
  os.write(reinterpret_cast<const char*>(policy.theta().data()),
           static_cast<std::streamsize>(policy.theta().size() * sizeof(double)));
  if (!os) throw std::runtime_error("checkpoint write failed");
}

struct Checkpoint {
  nlohmann::json config;
  ToyPolicy policy;
};

inline Checkpoint load_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CFCK", 4) != 0) throw std::runtime_error("not a checkpoint file");
  const auto get = [&](auto& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw std::runtime_error("truncated checkpoint");
  };
  std::uint32_t version = 0, len = 0;
  get(version);
  if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  get(len);
  std::string text(len, '\0');
  is.read(text.data(), len);
  if (!is) throw std::runtime_error("truncated checkpoint");
  nlohmann::json cfg = nlohmann::json::parse(text);
  ToyPolicy policy(cfg.at("experts").get<int>(), cfg.at("inputs").get<std::size_t>(), cfg.at("max_length").get<std::size_t>(),
                   cfg.at("vocab").get<std::size_t>());
  std::uint64_t count = 0;
  get(count);
  if (count != policy.parameter_count()) throw std::runtime_error("checkpoint parameter count mismatch");
  std::vector<double> theta(count);
  is.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw std::runtime_error("truncated checkpoint");
  policy.set_parameters(theta);
  return {std::move(cfg), std::move(policy)};
}

}  // namespace cadforge
