#include "tsinr/detection.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tsinr/errors.hpp"

namespace tsinr {

std::vector<double> anomaly_score(const Tensor& x, const Tensor& recon) {
  if (x.rank() != 2 || x.shape() != recon.shape())
    throw DimensionError("anomaly_score: shapes " + shape_to_string(x.shape()) + " and " +
                         shape_to_string(recon.shape()) + " differ");
  const std::size_t d = x.rows(), n = x.cols();
  auto a = x.data();
  auto b = recon.data();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = a[c * n + t] - b[c * n + t];
      acc += diff * diff;
    }
    out[t] = acc / static_cast<double>(d);
  }
  return out;
}

std::size_t proportion_count(std::size_t n, double gamma) {
  if (!(gamma > 0.0) || gamma > 100.0) throw ConfigError("gamma must lie in (0, 100]");
  // The small slack keeps e.g. 0.1 * 1000 / 100 from landing just below 1.
  const double exact = gamma * static_cast<double>(n) / 100.0;
  const auto k = static_cast<std::size_t>(std::floor(exact + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

double threshold_by_proportion(std::span<const double> scores, double gamma) {
  if (scores.empty()) throw MetricError("threshold_by_proportion: empty score series");
  const std::size_t k = proportion_count(scores.size(), gamma);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<double>());
  return sorted[k - 1];
}

std::vector<int> apply_threshold(std::span<const double> scores, double delta) {
  std::vector<int> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) labels[i] = scores[i] >= delta ? 1 : 0;
  return labels;
}

std::vector<Segment> segments(std::span<const int> labels) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < labels.size();) {
    if (!labels[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < labels.size() && labels[j]) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

std::vector<int> point_adjust(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size())
    throw DimensionError("point_adjust: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(truth.size()) + " labels");
  std::vector<int> out(pred.begin(), pred.end());
  for (const Segment& s : segments(truth)) {
    const bool hit = std::any_of(pred.begin() + static_cast<std::ptrdiff_t>(s.begin),
                                 pred.begin() + static_cast<std::ptrdiff_t>(s.end), [](int v) { return v != 0; });
    if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(s.begin), out.begin() + static_cast<std::ptrdiff_t>(s.end), 1);
  }
  return out;
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

Prf prf1(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size())
    throw DimensionError("prf1: " + std::to_string(pred.size()) + " predictions vs " + std::to_string(truth.size()) +
                         " labels");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && truth[i]) ++tp;
    else if (pred[i]) ++fp;
    else if (truth[i]) ++fn;
  }
  Prf r;
  r.precision = tp + fp ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall_defined = tp + fn > 0;
  r.recall = r.recall_defined ? 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

double weighted_auc(std::span<const double> scores, std::span<const double> positive_weight) {
  const std::size_t n = scores.size();
  if (positive_weight.size() != n)
    throw DimensionError("auc: " + std::to_string(n) + " scores vs " + std::to_string(positive_weight.size()) +
                         " labels");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk groups of equal score in ascending order; `below` holds the negative
  // weight of strictly lower scores.
  double numer = 0.0, total_p = 0.0, total_n = 0.0, self = 0.0, below = 0.0;
  for (std::size_t g = 0; g < n;) {
    std::size_t h = g;
    double group_n = 0.0;
    while (h < n && scores[order[h]] == scores[order[g]]) {
      group_n += 1.0 - positive_weight[order[h]];
      ++h;
    }
    for (std::size_t i = g; i < h; ++i) {
      const double p = positive_weight[order[i]];
      const double q = 1.0 - p;
      numer += p * (below + 0.5 * (group_n - q));
      total_p += p;
      total_n += q;
      self += p * q;
    }
    below += group_n;
    g = h;
  }
  const double denom = total_p * total_n - self;
  if (!(denom > 0.0)) throw MetricError("auc: needs both positive and negative weight");
  return numer / denom;
}

namespace {
void require_both_classes(std::span<const int> truth) {
  const auto pos = std::count_if(truth.begin(), truth.end(), [](int v) { return v != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == truth.size())
    throw MetricError("auc: ground truth contains a single class");
}
}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  require_both_classes(truth);
  std::vector<double> w(truth.begin(), truth.end());
  for (double& v : w) v = v != 0.0 ? 1.0 : 0.0;
  return weighted_auc(scores, w);
}

std::vector<double> buffered_labels(std::span<const int> truth, std::size_t buffer) {
  const std::size_t n = truth.size();
  std::vector<double> soft(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (truth[i]) soft[i] = 1.0;
  for (const Segment& s : segments(truth)) {
    for (std::size_t j = 1; j <= buffer; ++j) {
      const double v = 1.0 - static_cast<double>(j) / static_cast<double>(buffer + 1);
      if (s.begin >= j) soft[s.begin - j] = std::max(soft[s.begin - j], v);
      if (s.end - 1 + j < n) soft[s.end - 1 + j] = std::max(soft[s.end - 1 + j], v);
    }
  }
  return soft;
}

double vus_roc(std::span<const double> scores, std::span<const int> truth, std::size_t max_buffer) {
  require_both_classes(truth);
  double acc = 0.0;
  for (std::size_t l = 0; l <= max_buffer; ++l) acc += weighted_auc(scores, buffered_labels(truth, l));
  return acc / static_cast<double>(max_buffer + 1);
}

double default_gamma(const std::string& dataset_name) {
  std::string lower = dataset_name;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower.find("smd") != std::string::npos) return 0.5;
  if (lower.find("ucr") != std::string::npos) return 0.1;
  if (lower.find("skab") != std::string::npos) return 10.0;
  return 1.0;
}

DetectionReport make_report(std::vector<double> scores, std::vector<int> truth, double gamma, bool point_adjusted,
                            std::size_t max_buffer) {
  DetectionReport r;
  r.gamma = gamma;
  r.max_buffer = max_buffer;
  r.point_adjusted = point_adjusted;
  for (double s : scores)
    if (!std::isfinite(s) || s < 0.0) throw MetricError("scores must be finite and non-negative");
  r.delta = threshold_by_proportion(scores, gamma);
  r.labels = apply_threshold(scores, r.delta);
  r.scores = std::move(scores);
  if (!truth.empty()) {
    if (truth.size() != r.scores.size())
      throw DimensionError("report: " + std::to_string(truth.size()) + " labels vs " +
                           std::to_string(r.scores.size()) + " scores");
    r.truth = std::move(truth);
    r.raw = prf1(r.labels, r.truth);
    r.adjusted = prf1(point_adjust(r.labels, r.truth), r.truth);
    if (!r.raw.recall_defined) r.warnings.push_back("ground truth has no anomalies; recall reported as 0");
    try {
      r.auc = roc_auc(r.scores, r.truth);
      r.vus = vus_roc(r.scores, r.truth, max_buffer);
    } catch (const MetricError& e) {
      r.warnings.push_back(std::string("auc/vus undefined: ") + e.what());
    }
  }
  return r;
}

namespace {
std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
std::string fixed(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}
}  // namespace

std::string render_report(const DetectionReport& r) {
  std::ostringstream out;
  const auto positives = std::count(r.labels.begin(), r.labels.end(), 1);
  out << "points: " << r.scores.size() << '\n';
  out << "gamma: " << fmt(r.gamma) << '\n';
  out << "delta: " << fmt(r.delta) << '\n';
  out << "labeled_anomalies: " << positives << '\n';
  if (!r.truth.empty()) {
    const auto truth_pos = std::count(r.truth.begin(), r.truth.end(), 1);
    const Prf& head = r.point_adjusted ? r.adjusted : r.raw;
    out << "true_anomalies: " << truth_pos << '\n';
    out << "point_adjust: " << (r.point_adjusted ? "on" : "off") << '\n';
    out << "precision: " << fixed(head.precision, 2) << '\n';
    out << "recall: " << fixed(head.recall, 2) << '\n';
    out << "f1: " << fixed(head.f1, 2) << '\n';
    out << "raw_precision: " << fixed(r.raw.precision, 2) << '\n';
    out << "raw_recall: " << fixed(r.raw.recall, 2) << '\n';
    out << "raw_f1: " << fixed(r.raw.f1, 2) << '\n';
    out << "pa_precision: " << fixed(r.adjusted.precision, 2) << '\n';
    out << "pa_recall: " << fixed(r.adjusted.recall, 2) << '\n';
    out << "pa_f1: " << fixed(r.adjusted.f1, 2) << '\n';
    out << "auc: " << (r.auc ? fixed(*r.auc, 6) : std::string("undefined")) << '\n';
    out << "vus: " << (r.vus ? fixed(*r.vus, 6) : std::string("undefined")) << '\n';
    out << "vus_max_buffer: " << r.max_buffer << '\n';
  }
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string render_scores_csv(const DetectionReport& r) {
  std::string out = "t,score,label,truth\n";
  for (std::size_t t = 0; t < r.scores.size(); ++t) {
    out += std::to_string(t) + ',' + fmt(r.scores[t]) + ',' + std::to_string(r.labels[t]) + ',';
    if (!r.truth.empty()) out += std::to_string(r.truth[t]);
    out += '\n';
  }
  return out;
}

}  // namespace tsinr
