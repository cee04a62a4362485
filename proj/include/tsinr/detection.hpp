#pragma once

// Reconstruction-error scoring, proportion thresholding and evaluation metrics.
// Precision, recall and F1 are percentages; AUC and VUS are in [0, 1].

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinr/tensor.hpp"

namespace tsinr {

/// score(t) = mean over channels of (x - recon)^2; both [d x T].
std::vector<double> anomaly_score(const Tensor& x, const Tensor& recon);

/// Number of points the proportion gamma (percent) asks for: floor(gamma * n / 100),
/// at least one.
std::size_t proportion_count(std::size_t n, double gamma);
/// delta = k-th largest score with k = proportion_count(); every score >= delta
/// is labeled, so ties at delta may push the count above k.
double threshold_by_proportion(std::span<const double> scores, double gamma);
std::vector<int> apply_threshold(std::span<const double> scores, double delta);

struct Segment {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
};
std::vector<Segment> segments(std::span<const int> labels);

/// Marks every true segment that contains at least one predicted point.
std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> truth);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool recall_defined = true;  // false when truth has no positives
};

Prf prf1(std::span<const int> pred, std::span<const int> truth);
/// 2PR / (P + R), 0 when both are 0. Works on any consistent scale.
double f1_score(double precision, double recall);

/// Weighted pairwise AUC: sum_{i != j} p_i n_j [s_i > s_j] (+1/2 on ties) over
/// sum_{i != j} p_i n_j, where n = 1 - p. Hard 0/1 weights give ROC-AUC.
double weighted_auc(std::span<const double> scores, std::span<const double> positive_weight);
double roc_auc(std::span<const double> scores, std::span<const int> truth);
/// Truth softened by linear ramps of width l on both sides of each segment:
/// soft label 1 - j / (l + 1) at distance j <= l, overlaps take the max.
std::vector<double> buffered_labels(std::span<const int> truth, std::size_t buffer);
/// Mean of weighted_auc over buffer widths 0..max_buffer.
double vus_roc(std::span<const double> scores, std::span<const int> truth, std::size_t max_buffer = 25);

/// 0.5 for SMD, 0.1 for UCR, 10 for SKAB (matched case-insensitively against
/// the dataset name), 1 otherwise.
double default_gamma(const std::string& dataset_name);

struct DetectionReport {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<int> truth;  // empty when no ground truth was given
  double delta = 0.0;
  double gamma = 1.0;
  std::size_t max_buffer = 25;
  bool point_adjusted = true;  // which F1 is reported as the headline
  Prf raw;
  Prf adjusted;
  std::optional<double> auc;
  std::optional<double> vus;
  std::vector<std::string> warnings;
};

/// Thresholds scores at gamma and, when truth is non-empty, fills every metric.
DetectionReport make_report(std::vector<double> scores, std::vector<int> truth, double gamma,
                            bool point_adjusted = true, std::size_t max_buffer = 25);

/// key: value lines, fixed key order.
std::string render_report(const DetectionReport& report);
/// Header t,score,label,truth; truth empty when unknown.
std::string render_scores_csv(const DetectionReport& report);

}  // namespace tsinr
