#include <gtest/gtest.h>

#include <random>

#include "cadforge/metrics.hpp"

using namespace cadforge;

namespace {

const char* kBox = "workplane XY (0,0,0); rect 10 6; extrude 4;";

SampleMetrics executed(double cd, double iou = 1.0) {
  SampleMetrics s;
  s.reward.r_format = 1;
  s.reward.r_exec = 1;
  s.reward.r_iou = iou;
  s.cd = cd;
  return s;
}

}  // namespace

TEST(ChamferDistance, Examples) {
  const PointCloud a{{{0, 0, 0}}};
  const PointCloud b{{{1, 0, 0}}};
  EXPECT_EQ(chamfer_distance(a, b), 1.0);
  EXPECT_EQ(chamfer_distance(a, a), 0.0);
  EXPECT_THROW((void)chamfer_distance(a, PointCloud{}), std::invalid_argument);
}

TEST(ChamferDistance, Symmetric) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    PointCloud a;
    PointCloud b;
    for (int i = 0; i < 37; ++i) a.points.push_back({u(rng), u(rng), u(rng)});
    for (int i = 0; i < 23; ++i) b.points.push_back({u(rng), u(rng), u(rng)});
    EXPECT_DOUBLE_EQ(chamfer_distance(a, b), chamfer_distance(b, a));
  }
}

TEST(ChamferDistance, AsymmetricSetsAverageBothDirections) {
  const PointCloud a{{{0, 0, 0}}};
  const PointCloud b{{{0, 0, 0}, {2, 0, 0}}};
  EXPECT_DOUBLE_EQ(chamfer_distance(a, b), 0.5 * (0.0 + 1.0));
}

TEST(Aggregate, MeanAndMedianOfCds) {
  const std::vector<SampleMetrics> s = {executed(0.1), executed(0.2), executed(0.3), executed(10.0)};
  const MetricsTable t = aggregate_metrics(s);
  EXPECT_NEAR(t.mean_cd, 2.65, 1e-12);
  EXPECT_NEAR(t.median_cd, 0.25, 1e-12);
  EXPECT_EQ(t.exec_percent, 100.0);
  EXPECT_EQ(t.samples, 4u);
}

TEST(Aggregate, FailuresCountZeroIou) {
  std::vector<SampleMetrics> s = {executed(0.1, 1.0), executed(0.2, 0.5), executed(0.3, 0.5), SampleMetrics{}};
  s[3].cd = 7.0;
  const MetricsTable t = aggregate_metrics(s);
  EXPECT_EQ(t.exec_percent, 75.0);
  EXPECT_NEAR(t.iou_percent, 50.0, 1e-12);
  EXPECT_NEAR(t.mean_cd, (0.1 + 0.2 + 0.3 + 7.0) / 4, 1e-12);
}

TEST(Aggregate, EmptyRejected) {
  EXPECT_THROW((void)aggregate_metrics(std::span<const SampleMetrics>{}), std::invalid_argument);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(EvaluateDataset, IdentityPredictions) {
  const std::vector<RewardTarget> targets = {
      RewardTarget::from_text(kBox),
      RewardTarget::from_text("workplane YZ (1,0,0); circle 2; extrude 3; hole (0,0) 0.5 through;")};
  const std::vector<std::string> preds = {wrap_output(emit(targets[0].program)), wrap_output(emit(targets[1].program))};
  RewardConfig cfg;
  cfg.cd_samples = 256;
  const MetricsTable t = evaluate_dataset(preds, targets, cfg, 5);
  EXPECT_EQ(t.iou_percent, 100.0);
  EXPECT_EQ(t.exec_percent, 100.0);
  EXPECT_EQ(t.mean_cd, 0.0);
  EXPECT_EQ(t.median_cd, 0.0);
}

TEST(EvaluateDataset, ThreeOfFourExecutable) {
  const RewardTarget t = RewardTarget::from_text(kBox);
  const std::vector<RewardTarget> targets(4, t);
  const std::vector<std::string> preds = {wrap_output(kBox), wrap_output(kBox), wrap_output(kBox),
                                          wrap_output("rect 10;;;")};
  RewardConfig cfg;
  cfg.cd_samples = 128;
  std::vector<SampleMetrics> per;
  const MetricsTable m = evaluate_dataset(preds, targets, cfg, 1, &per);
  EXPECT_EQ(m.exec_percent, 75.0);
  EXPECT_NEAR(m.iou_percent, 75.0, 1e-12);
  ASSERT_EQ(per.size(), 4u);
  EXPECT_EQ(per[3].cd, t.bbox_diagonal);
  EXPECT_NEAR(m.mean_cd, t.bbox_diagonal / 4, 1e-12);

  cfg.failure_cd = FailureCdPolicy::Exclude;
  const MetricsTable ex = evaluate_dataset(preds, targets, cfg, 1);
  EXPECT_EQ(ex.mean_cd, 0.0);
  EXPECT_EQ(ex.exec_percent, 75.0);
}

TEST(EvaluateDataset, LengthMismatchRejected) {
  const std::vector<RewardTarget> targets = {RewardTarget::from_text(kBox)};
  const std::vector<std::string> preds = {wrap_output(kBox), wrap_output(kBox)};
  EXPECT_THROW((void)evaluate_dataset(preds, targets), std::invalid_argument);
}

TEST(MetricsTable, CsvAndPretty) {
  MetricsTable t;
  t.iou_percent = 75;
  t.mean_cd = 2.65;
  t.median_cd = 0.25;
  t.exec_percent = 75;
  t.samples = 4;
  EXPECT_EQ(t.csv(), "75.0000,2.650000,0.250000,75.0000,4");
  EXPECT_NE(t.pretty().find("Exec.(%)"), std::string::npos);
}

TEST(SampleSeed, Distinct) {
  EXPECT_NE(sample_seed(1, 0), sample_seed(1, 1));
  EXPECT_NE(sample_seed(1, 0), sample_seed(2, 0));
  EXPECT_EQ(sample_seed(3, 4), sample_seed(3, 4));
}
