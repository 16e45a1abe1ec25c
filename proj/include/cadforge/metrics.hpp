#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cadforge/kernel.hpp"
#include "cadforge/rewards.hpp"

namespace cadforge {

/// Symmetric chamfer distance: mean of the two directed mean nearest-neighbour distances.
inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("chamfer_distance: empty cloud");
  const auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double sum = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) {
        const Vec3 d = p - q;
        best = std::min(best, dot(d, d));
      }
      sum += std::sqrt(best);
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a.points, b.points) + directed(b.points, a.points));
}

struct MetricsTable {
  double iou_percent = 0;
  double mean_cd = 0;
  double median_cd = 0;
  double exec_percent = 0;
  std::size_t samples = 0;

  /// iou_percent,mean_cd,median_cd,exec_percent,samples
  std::string csv() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.4f,%.6f,%.6f,%.4f,%zu", iou_percent, mean_cd, median_cd, exec_percent, samples);
    return buf;
  }

  std::string pretty() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "+---------+----------+----------+----------+---------+\n"
                  "| IoU(%%)  | Mean CD  | Med CD   | Exec.(%%) | samples |\n"
                  "+---------+----------+----------+----------+---------+\n"
                  "| %7.2f | %8.4f | %8.4f | %8.2f | %7zu |\n"
                  "+---------+----------+----------+----------+---------+\n",
                  iou_percent, mean_cd, median_cd, exec_percent, samples);
    return buf;
  }
};

struct SampleMetrics {
  RewardBreakdown reward;
  double cd = 0;
  bool cd_counted = true;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Dataset-level statistics from per-sample results, reduced in input order.
inline MetricsTable aggregate_metrics(std::span<const SampleMetrics> samples) {
  if (samples.empty()) throw std::invalid_argument("aggregate_metrics: no samples");
  MetricsTable t;
  t.samples = samples.size();
  double iou_sum = 0.0;
  std::size_t exec = 0;
  std::vector<double> cds;
  for (const SampleMetrics& s : samples) {
    iou_sum += s.reward.r_exec > 0.0 ? s.reward.r_iou : 0.0;
    if (s.reward.r_exec > 0.0) ++exec;
    if (s.cd_counted) cds.push_back(s.cd);
  }
  const double n = static_cast<double>(samples.size());
  t.iou_percent = 100.0 * iou_sum / n;
  t.exec_percent = 100.0 * static_cast<double>(exec) / n;
  if (!cds.empty()) {
    double sum = 0.0;
    for (double c : cds) sum += c;
    t.mean_cd = sum / static_cast<double>(cds.size());
    t.median_cd = median(cds);
  }
  return t;
}

inline std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Reward and chamfer distance of one prediction against its target.
inline SampleMetrics evaluate_sample(std::string_view prediction, const RewardTarget& target, const RewardConfig& cfg,
                                     std::uint64_t seed) {
  SampleMetrics s;
  s.reward = total_reward(prediction, target, cfg);
  if (s.reward.r_exec > 0.0) {
    const ImplicitSolid gen = build_solid(*s.reward.program);
    try {
      s.cd = chamfer_distance(surface_points(gen, cfg.cd_samples, seed),
                              surface_points(target.solid, cfg.cd_samples, seed));
    } catch (const GeometryError&) {
      s.cd = target.bbox_diagonal;
    }
  } else if (cfg.failure_cd == FailureCdPolicy::GtDiagonal) {
    s.cd = target.bbox_diagonal;
  } else {
    s.cd_counted = false;
  }
  return s;
}

inline MetricsTable evaluate_dataset(std::span<const std::string> predictions, std::span<const RewardTarget> targets,
                                     const RewardConfig& cfg = {}, std::uint64_t seed = 0,
                                     std::vector<SampleMetrics>* per_sample = nullptr) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("evaluate_dataset: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(targets.size()) + " records");
  if (predictions.empty()) throw std::invalid_argument("evaluate_dataset: no samples");
  std::vector<SampleMetrics> samples;
  samples.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    samples.push_back(evaluate_sample(predictions[i], targets[i], cfg, sample_seed(seed, i)));
  const MetricsTable t = aggregate_metrics(samples);
  if (per_sample) *per_sample = std::move(samples);
  return t;
}

}  // namespace cadforge
