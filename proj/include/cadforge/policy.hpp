#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadforge/tokens.hpp"

namespace cadforge {

/// One expert: a fixed, unique system prompt.
struct ExpertProfile {
  int id = 1;  // 1-based
  std::string prompt;
};

/// Default prompts, each steering a different reasoning style.
inline std::vector<ExpertProfile> default_experts(int n) {
  static const char* const prompts[] = {
      "You are a CAD engineer. Reason step by step over each feature before writing code.",
      "You are a CAD planner. State a plan for the whole part, then check it before writing code.",
      "You are a drafting expert. Read the three views and their dimensions first, then write code.",
  };
  if (n < 1) throw std::invalid_argument("expert count must be >= 1");
  std::vector<ExpertProfile> out;
  for (int i = 0; i < n; ++i) {
    std::string p = prompts[i % 3];
    if (i >= 3) p += " (variant " + std::to_string(i / 3) + ")";
    out.push_back({i + 1, p});
  }
  return out;
}

struct SampledSequence {
  TokenSeq tokens;  // includes the terminating EOS unless truncated
  double logprob = 0;
  bool truncated = false;
};

inline std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0) {
  std::vector<double> p(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (double l : logits) m = std::max(m, l);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - m) / temperature);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

/// Autoregressive policy over the token vocabulary, conditioned on (expert, input).
/// Everything except `sample` is evaluated at temperature 1.
class PolicyInterface {
 public:
  virtual ~PolicyInterface() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_length() const = 0;

  /// Next-token logits after `prefix`.
  virtual std::vector<double> logits(std::span<const TokenId> prefix, const ExpertProfile& expert,
                                     std::size_t input) const = 0;

  /// Add d(loss)/d(theta) into `grad` given d(loss)/d(logits) at `prefix`.
  virtual void backprop_logits(std::span<const TokenId> prefix, const ExpertProfile& expert, std::size_t input,
                               std::span<const double> dlogits, std::vector<double>& grad) const = 0;

  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> theta) = 0;
  virtual std::size_t parameter_count() const = 0;

  /// In-place gradient step theta -= lr * grad.
  virtual void apply_gradient(std::span<const double> grad, double lr) {
    std::vector<double> theta = parameters();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
    set_parameters(theta);
  }

  std::vector<double> token_distribution(std::span<const TokenId> prefix, const ExpertProfile& expert,
                                         std::size_t input) const {
    return softmax(logits(prefix, expert, input));
  }

  /// Sum of per-step log-probabilities of every token of `seq`.
  double logprob(std::span<const TokenId> seq, const ExpertProfile& expert, std::size_t input) const {
    double lp = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const std::vector<double> p = token_distribution(seq.first(t), expert, input);
      lp += std::log(p.at(seq[t]));
    }
    return lp;
  }

  /// Add coef * d(logprob(seq))/d(theta) into `grad`.
  void backprop_logprob(std::span<const TokenId> seq, const ExpertProfile& expert, std::size_t input, double coef,
                        std::vector<double>& grad) const {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      std::vector<double> d = token_distribution(seq.first(t), expert, input);
      for (double& v : d) v = -coef * v;
      d[seq[t]] += coef;
      backprop_logits(seq.first(t), expert, input, d, grad);
    }
  }

  /// Autoregressive sample until EOS or the length cap.
  SampledSequence sample(const ExpertProfile& expert, std::size_t input, double temperature, std::uint64_t seed) const {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    std::mt19937_64 rng(seed);
    SampledSequence s;
    s.truncated = true;
    while (s.tokens.size() < max_length()) {
      const std::vector<double> l = logits(s.tokens, expert, input);
      const std::vector<double> q = softmax(l, temperature);
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      double acc = 0.0;
      std::size_t pick = q.size() - 1;
      for (std::size_t v = 0; v < q.size(); ++v) {
        acc += q[v];
        if (u < acc) {
          pick = v;
          break;
        }
      }
      // Guard against rounding picking a zero-probability tail entry.
      while (q[pick] == 0.0 && pick > 0) --pick;
      const std::vector<double> p1 = softmax(l);
      s.logprob += std::log(p1[pick]);
      s.tokens.push_back(static_cast<TokenId>(pick));
      if (pick == vocab::kEos) {
        s.truncated = false;
        break;
      }
    }
    return s;
  }
};

/// Tabular reference policy. Logits are the sum of three tables:
///   position[e][t][v] + bigram[e][prev][v] + input[e][i][t][v]
/// where e is the expert index, prev the previous token (EOS at the start), i the input
/// id modulo the number of input slots, and t the position counted from the most recent
/// wrapper tag (one row block per tag kind), so code tokens line up across experts whose
/// reasoning blocks differ in length. Zero parameters give the uniform distribution.
class ToyPolicy final : public PolicyInterface {
 public:
  ToyPolicy(int experts, std::size_t inputs, std::size_t max_len = 72, std::size_t vocab = vocab::kSize)
      : experts_(experts), inputs_(inputs), max_len_(max_len), vocab_(vocab) {
    if (experts < 1 || inputs < 1 || max_len < 1 || vocab < 2) throw std::invalid_argument("ToyPolicy: bad shape");
    rows_ = kSegments * max_len_;
    position_size_ = static_cast<std::size_t>(experts_) * rows_ * vocab_;
    bigram_size_ = static_cast<std::size_t>(experts_) * vocab_ * vocab_;
    input_size_ = static_cast<std::size_t>(experts_) * inputs_ * rows_ * vocab_;
    theta_.assign(position_size_ + bigram_size_ + input_size_, 0.0);
  }

  int experts() const { return experts_; }
  std::size_t inputs() const { return inputs_; }
  std::size_t vocab_size() const override { return vocab_; }
  std::size_t max_length() const override { return max_len_; }
  std::size_t parameter_count() const override { return theta_.size(); }
  std::vector<double> parameters() const override { return theta_; }
  const std::vector<double>& theta() const { return theta_; }

  void set_parameters(std::span<const double> theta) override {
    if (theta.size() != theta_.size()) throw std::invalid_argument("ToyPolicy: parameter size mismatch");
    theta_.assign(theta.begin(), theta.end());
  }

  void apply_gradient(std::span<const double> grad, double lr) override {
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] -= lr * grad[i];
  }

  /// Deterministic N(0, scale²) initialization.
  void randomize(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    for (double& v : theta_) v = n(rng);
  }

  std::vector<double> logits(std::span<const TokenId> prefix, const ExpertProfile& expert,
                             std::size_t input) const override {
    const Offsets o = offsets(prefix, expert, input);
    std::vector<double> l(vocab_);
    for (std::size_t v = 0; v < vocab_; ++v) l[v] = theta_[o.position + v] + theta_[o.bigram + v] + theta_[o.input + v];
    return l;
  }

  void backprop_logits(std::span<const TokenId> prefix, const ExpertProfile& expert, std::size_t input,
                       std::span<const double> dlogits, std::vector<double>& grad) const override {
    if (grad.size() != theta_.size()) grad.assign(theta_.size(), 0.0);
    const Offsets o = offsets(prefix, expert, input);
    for (std::size_t v = 0; v < vocab_; ++v) {
      grad[o.position + v] += dlogits[v];
      grad[o.bigram + v] += dlogits[v];
      grad[o.input + v] += dlogits[v];
    }
  }

 private:
  struct Offsets {
    std::size_t position, bigram, input;
  };

  static constexpr std::size_t kSegments = 5;  // before any tag, then after each of the four tags

  /// Row of the position tables: tag segment and offset since that tag.
  std::size_t row(std::span<const TokenId> prefix) const {
    std::size_t k = prefix.size();
    while (k > 0 && !(prefix[k - 1] >= vocab::kThinkOpen && prefix[k - 1] <= vocab::kCodeClose)) --k;
    const std::size_t segment = k == 0 ? 0 : prefix[k - 1];
    return segment * max_len_ + (prefix.size() - k);
  }

  Offsets offsets(std::span<const TokenId> prefix, const ExpertProfile& expert, std::size_t input) const {
    const std::size_t t = prefix.size();
    if (t >= max_len_) throw std::out_of_range("ToyPolicy: position beyond max length");
    const std::size_t prev = prefix.empty() ? vocab::kEos : prefix.back();
    if (prev >= vocab_) throw std::out_of_range("ToyPolicy: token id beyond vocabulary");
    const std::size_t e = static_cast<std::size_t>((expert.id - 1) % experts_);
    const std::size_t i = input % inputs_;
    const std::size_t r = row(prefix);
    return {(e * rows_ + r) * vocab_, position_size_ + (e * vocab_ + prev) * vocab_,
            position_size_ + bigram_size_ + ((e * inputs_ + i) * rows_ + r) * vocab_};
  }

  int experts_;
  std::size_t inputs_, max_len_, vocab_;
  std::size_t rows_ = 0;
  std::size_t position_size_ = 0, bigram_size_ = 0, input_size_ = 0;
  std::vector<double> theta_;
};

}  // namespace cadforge
