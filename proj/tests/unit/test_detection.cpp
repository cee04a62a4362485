#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "tsinr/detection.hpp"
#include "tsinr/errors.hpp"

using namespace tsinr;

namespace {

// Double loop over ordered pairs (i, j), i != j.
double pairwise_weighted_auc(const std::vector<double>& s, const std::vector<double>& p) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (i == j) continue;
      const double w = p[i] * (1 - p[j]);
      den += w;
      if (s[i] > s[j]) num += w;
      else if (s[i] == s[j]) num += 0.5 * w;
    }
  return num / den;
}

// Soft labels straight from the definition: distance to the nearest true point.
std::vector<double> ramp_oracle(const std::vector<int>& truth, std::size_t l) {
  std::vector<double> out(truth.size(), 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!truth[j]) continue;
      const std::size_t dist = i > j ? i - j : j - i;
      if (dist <= l) out[i] = std::max(out[i], 1.0 - static_cast<double>(dist) / static_cast<double>(l + 1));
    }
  return out;
}

}  // namespace

TEST(Score, ExactReconstructionScoresZero) {
  Tensor x = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  for (double s : anomaly_score(x, x)) EXPECT_EQ(s, 0.0);
}

TEST(Score, ChannelMeanOfSquaredDifference) {
  Tensor x = Tensor::matrix({{1, 0}, {-1, 0}});
  Tensor r = Tensor::zeros({2, 2});
  auto s = anomaly_score(x, r);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_THROW(anomaly_score(x, Tensor::zeros({2, 3})), DimensionError);
}

TEST(Score, ScalingDiffsScalesByConstantSquared) {
  Tensor x = Tensor::matrix({{0.5, -1.5, 2}, {1, 0.25, -3}});
  Tensor r = Tensor::zeros({2, 3});
  Tensor x3 = scale(x, 3.0);
  auto a = anomaly_score(x, r), b = anomaly_score(x3, r);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(b[t], 9.0 * a[t]);
}

TEST(Threshold, TenPercentOfOneToTen) {
  std::vector<double> s{3, 1, 4, 10, 5, 9, 2, 6, 8, 7};
  const double delta = threshold_by_proportion(s, 10);
  EXPECT_EQ(delta, 10.0);
  auto labels = apply_threshold(s, delta);
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 1);
  EXPECT_EQ(labels[3], 1);
}

TEST(Threshold, FullProportionLabelsEverything) {
  std::vector<double> s{0.1, 0.5, 0.2, 0.0};
  auto labels = apply_threshold(s, threshold_by_proportion(s, 100));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 4);
}

TEST(Threshold, TiesAtDeltaAreAllLabeled) {
  std::vector<double> s{1, 5, 5, 5, 2};
  auto labels = apply_threshold(s, threshold_by_proportion(s, 20));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), 1), 3);
}

TEST(Threshold, CountRoundsDownWithFloorOfOne) {
  EXPECT_EQ(proportion_count(1000, 0.1), 1u);
  EXPECT_EQ(proportion_count(2000, 0.5), 10u);
  EXPECT_EQ(proportion_count(99, 1), 1u);
  EXPECT_EQ(proportion_count(10, 0.01), 1u);
  EXPECT_EQ(proportion_count(250, 10), 25u);
  EXPECT_THROW(proportion_count(10, 0), ConfigError);
  EXPECT_THROW(threshold_by_proportion(std::vector<double>{}, 1), MetricError);
}

TEST(Threshold, DatasetDefaults) {
  EXPECT_EQ(default_gamma("SMD"), 0.5);
  EXPECT_EQ(default_gamma("ucr_042"), 0.1);
  EXPECT_EQ(default_gamma("SKAB"), 10.0);
  EXPECT_EQ(default_gamma("PSM"), 1.0);
}

TEST(Threshold, MonotoneTransformKeepsLabels) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 5);
  std::vector<double> s(200), t(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    t[i] = std::exp(2 * s[i]) + 3;
  }
  EXPECT_EQ(apply_threshold(s, threshold_by_proportion(s, 7)), apply_threshold(t, threshold_by_proportion(t, 7)));
}

TEST(PointAdjust, ExpandsHitSegments) {
  std::vector<int> truth{0, 0, 0, 1, 1, 1, 1, 0, 1, 1};
  std::vector<int> pred{1, 0, 0, 0, 1, 0, 0, 0, 0, 0};
  EXPECT_EQ(point_adjust(pred, truth), (std::vector<int>{1, 0, 0, 1, 1, 1, 1, 0, 0, 0}));
}

TEST(PointAdjust, NoTruthOrNoPredictionUnchanged) {
  std::vector<int> zeros(6, 0), pred{0, 1, 0, 1, 1, 0};
  EXPECT_EQ(point_adjust(pred, zeros), pred);
  std::vector<int> truth{1, 1, 0, 0, 1, 1};
  EXPECT_EQ(point_adjust(zeros, truth), zeros);
  EXPECT_THROW(point_adjust(pred, std::vector<int>{1}), DimensionError);
}

TEST(PointAdjust, NeverUnsetsAndStaysInsideSegments) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> pred(40), truth(40);
    for (auto& v : pred) v = rng() % 5 == 0;
    for (auto& v : truth) v = rng() % 3 == 0;
    auto adj = point_adjust(pred, truth);
    for (std::size_t i = 0; i < 40; ++i) {
      if (pred[i]) EXPECT_EQ(adj[i], 1);
      if (!pred[i] && adj[i]) EXPECT_EQ(truth[i], 1);
    }
  }
}

TEST(Prf, PerfectPrediction) {
  std::vector<int> t{0, 1, 1, 0, 1};
  Prf r = prf1(t, t);
  EXPECT_EQ(r.precision, 100.0);
  EXPECT_EQ(r.recall, 100.0);
  EXPECT_EQ(r.f1, 100.0);
}

TEST(Prf, PublishedPairs) {
  EXPECT_NEAR(f1_score(83.09, 80.46), 81.76, 0.01);
  EXPECT_NEAR(f1_score(99.21, 89.37), 94.04, 0.01);
  EXPECT_EQ(f1_score(0, 0), 0.0);
}

TEST(Prf, HandCounts) {
  std::vector<int> pred{1, 1, 0, 1, 0, 0}, truth{1, 0, 1, 1, 1, 0};
  Prf r = prf1(pred, truth);  // tp 2, fp 1, fn 2
  EXPECT_DOUBLE_EQ(r.precision, 200.0 / 3);
  EXPECT_DOUBLE_EQ(r.recall, 50.0);
  EXPECT_NEAR(r.f1, 2 * (200.0 / 3) * 50 / (200.0 / 3 + 50), 1e-12);
}

TEST(Prf, NoPositivesFlagsUndefinedRecall) {
  std::vector<int> pred{1, 0}, truth{0, 0};
  Prf r = prf1(pred, truth);
  EXPECT_FALSE(r.recall_defined);
  EXPECT_EQ(r.recall, 0.0);
  auto rep = make_report({0.5, 0.1}, truth, 50);
  EXPECT_NE(render_report(rep).find("warning:"), std::string::npos);
}

TEST(Auc, SeparatingAndTied) {
  std::vector<int> truth{0, 0, 1, 1, 0};
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.9, 0.8, 0.3}, truth), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>(5, 0.4), truth), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), MetricError);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{0, 0}), MetricError);
}

TEST(Auc, MatchesPairwiseOracleOnRandomInstances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20;
    std::vector<double> s(n), p(n);
    std::vector<int> truth(n);
    do {
      for (auto& v : truth) v = rng() % 4 == 0;
    } while (std::count(truth.begin(), truth.end(), 1) == 0 || std::count(truth.begin(), truth.end(), 0) == 0);
    for (auto& v : s) v = static_cast<double>(rng() % 8) / 4.0;  // many ties
    for (std::size_t i = 0; i < n; ++i) p[i] = truth[i];
    EXPECT_NEAR(roc_auc(s, truth), pairwise_weighted_auc(s, p), 1e-12);
  }
}

TEST(Auc, MonotoneTransformInvariance) {
  std::mt19937_64 rng(4);
  std::vector<double> s(60), t(60);
  std::vector<int> truth(60);
  for (std::size_t i = 0; i < 60; ++i) {
    s[i] = static_cast<double>(rng() % 1000) / 100.0;
    t[i] = std::log1p(s[i]) * 7 - 2;
    truth[i] = (i % 9) == 0;
  }
  EXPECT_EQ(roc_auc(s, truth), roc_auc(t, truth));
  EXPECT_EQ(vus_roc(s, truth, 5), vus_roc(t, truth, 5));
}

TEST(Vus, BufferRamps) {
  std::vector<int> truth{0, 0, 0, 0, 1, 1, 0, 0, 0, 0};
  auto b = buffered_labels(truth, 2);
  std::vector<double> expect{0, 0, 1.0 / 3, 2.0 / 3, 1, 1, 2.0 / 3, 1.0 / 3, 0, 0};
  for (std::size_t i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(b[i], expect[i]);
  auto b0 = buffered_labels(truth, 0);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(b0[i], truth[i]);
}

TEST(Vus, ZeroBufferEqualsAuc) {
  std::vector<double> s{0.3, 0.1, 0.7, 0.2, 0.9, 0.4};
  std::vector<int> truth{0, 0, 1, 0, 1, 0};
  EXPECT_EQ(vus_roc(s, truth, 0), roc_auc(s, truth));
  EXPECT_EQ(vus_roc(std::vector<double>{0, 0, 1, 0}, std::vector<int>{0, 0, 1, 0}, 0), 1.0);
}

TEST(Vus, SmallInstanceMatchesDoubleLoop) {
  std::vector<double> s{0.2, 0.5, 0.1, 0.9, 0.8, 0.3, 0.3, 0.05, 0.6};
  std::vector<int> truth{0, 0, 0, 1, 1, 0, 0, 0, 1};
  double acc = 0;
  for (std::size_t l = 0; l <= 2; ++l) acc += pairwise_weighted_auc(s, ramp_oracle(truth, l));
  EXPECT_NEAR(vus_roc(s, truth, 2), acc / 3, 1e-12);
}

TEST(Vus, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng() % 26;
    std::vector<double> s(n);
    std::vector<int> truth(n, 0);
    truth[rng() % n] = 1;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 6 == 0) truth[i] = 1;
    if (std::count(truth.begin(), truth.end(), 0) == 0) truth[0] = 0;
    for (auto& v : s) v = static_cast<double>(rng() % 10);
    const std::size_t L = rng() % 6;
    double acc = 0;
    for (std::size_t l = 0; l <= L; ++l) acc += pairwise_weighted_auc(s, ramp_oracle(truth, l));
    EXPECT_NEAR(vus_roc(s, truth, L), acc / static_cast<double>(L + 1), 1e-12);
  }
}

TEST(Report, FixedKeysAndBothF1Variants) {
  std::vector<double> scores(100, 0.1);
  std::vector<int> truth(100, 0);
  for (std::size_t i = 40; i < 45; ++i) truth[i] = 1;
  scores[42] = 5.0;
  auto rep = make_report(scores, truth, 1.0);
  EXPECT_EQ(rep.delta, 5.0);
  EXPECT_DOUBLE_EQ(rep.raw.recall, 20.0);
  EXPECT_DOUBLE_EQ(rep.adjusted.recall, 100.0);
  EXPECT_TRUE(rep.auc.has_value());
  const std::string text = render_report(rep);
  for (const char* key : {"points: 100\n", "gamma: 1\n", "delta: 5\n", "labeled_anomalies: 1\n", "true_anomalies: 5\n",
                          "point_adjust: on\n", "f1: 100.00\n", "raw_f1: 33.33\n", "pa_f1: 100.00\n", "auc: ",
                          "vus: ", "vus_max_buffer: 25\n"})
    EXPECT_NE(text.find(key), std::string::npos) << key;
  auto raw = make_report(scores, truth, 1.0, false);
  EXPECT_NE(render_report(raw).find("f1: 33.33\n"), std::string::npos);
}

TEST(Report, ScoresCsv) {
  auto rep = make_report({0.5, 2.0, 0.25}, {0, 1, 0}, 34);
  EXPECT_EQ(render_scores_csv(rep), "t,score,label,truth\n0,0.5,0,0\n1,2,1,1\n2,0.25,0,0\n");
  auto blind = make_report({0.5, 2.0}, {}, 50);
  EXPECT_EQ(render_scores_csv(blind), "t,score,label,truth\n0,0.5,0,\n1,2,1,\n");
}
