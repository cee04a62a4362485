#include "tsinr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tsinr/detection.hpp"
#include "tsinr/errors.hpp"

namespace tsinr {

namespace {

constexpr double kWidth = 1000.0;
constexpr double kPanel = 160.0;
constexpr double kGap = 30.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Panel {
  double top;
  double lo, hi;
  std::size_t n;

  double x(std::size_t i) const {
    const double span = n > 1 ? static_cast<double>(n - 1) : 1.0;
    return kLeft + (kWidth - kLeft - kRight) * static_cast<double>(i) / span;
  }
  double y(double v) const {
    const double range = hi > lo ? hi - lo : 1.0;
    return top + kPanel - kPanel * (v - lo) / range;
  }
};

std::string polyline(const Panel& p, std::span<const double> values, const std::string& cls, const std::string& stroke,
                     const std::string& extra = "") {
  std::string pts;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) pts += ' ';
    pts += num(p.x(i)) + ',' + num(p.y(values[i]));
  }
  return "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1\"" + extra +
         " points=\"" + pts + "\"/>\n";
}

std::string shading(const Panel& p, std::span<const int> truth) {
  std::string out;
  for (const Segment& s : segments(truth)) {
    const double x0 = p.x(s.begin);
    const double x1 = s.end - 1 > s.begin ? p.x(s.end - 1) : x0 + 1.0;
    out += "<rect class=\"truth\" data-begin=\"" + std::to_string(s.begin) + "\" data-end=\"" +
           std::to_string(s.end) + "\" x=\"" + num(x0) + "\" y=\"" + num(p.top) + "\" width=\"" +
           num(std::max(x1 - x0, 1.0)) + "\" height=\"" + num(kPanel) + "\" fill=\"#f4b6b6\" opacity=\"0.5\"/>\n";
  }
  return out;
}

std::string frame(const Panel& p, const std::string& title) {
  return "<rect x=\"" + num(kLeft) + "\" y=\"" + num(p.top) + "\" width=\"" + num(kWidth - kLeft - kRight) +
         "\" height=\"" + num(kPanel) + "\" fill=\"none\" stroke=\"#999\"/>\n" + "<text x=\"" + num(kLeft) + "\" y=\"" +
         num(p.top - 6) + "\" font-size=\"12\" font-family=\"sans-serif\">" + escape(title) + "</text>\n";
}

}  // namespace

std::string render_svg(const PlotInput& in) {
  if (in.data.rank() != 2) throw DimensionError("plot: data must be [d x n]");
  const std::size_t d = in.data.rows(), n = in.data.cols();
  if (in.scores.size() != n)
    throw DimensionError("plot: " + std::to_string(in.scores.size()) + " scores for a series of length " +
                         std::to_string(n));
  if (!in.truth.empty() && in.truth.size() != n)
    throw DimensionError("plot: " + std::to_string(in.truth.size()) + " labels for a series of length " +
                         std::to_string(n));
  if (in.recon && in.recon->shape() != in.data.shape())
    throw DimensionError("plot: reconstruction shape " + shape_to_string(in.recon->shape()) + " differs from data " +
                         shape_to_string(in.data.shape()));

  const double height = static_cast<double>(d + 1) * (kPanel + kGap) + kGap;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t c = 0; c < d; ++c) {
    std::span<const double> row = in.data.data().subspan(c * n, n);
    double lo = *std::min_element(row.begin(), row.end());
    double hi = *std::max_element(row.begin(), row.end());
    std::span<const double> rec;
    if (in.recon) {
      rec = in.recon->data().subspan(c * n, n);
      lo = std::min(lo, *std::min_element(rec.begin(), rec.end()));
      hi = std::max(hi, *std::max_element(rec.begin(), rec.end()));
    }
    const Panel p{kGap + static_cast<double>(c) * (kPanel + kGap), lo, hi, n};
    const std::string name = c < in.channel_names.size() ? in.channel_names[c] : "channel " + std::to_string(c);
    svg += "<g class=\"channel\">\n" + frame(p, name);
    if (!in.truth.empty()) svg += shading(p, in.truth);
    svg += polyline(p, row, "series", "#1f77b4");
    if (in.recon) svg += polyline(p, rec, "reconstruction", "#ff7f0e", " stroke-dasharray=\"4 2\"");
    svg += "</g>\n";
  }

  double lo = 0.0;
  double hi = n ? *std::max_element(in.scores.begin(), in.scores.end()) : 1.0;
  if (in.delta) hi = std::max(hi, *in.delta);
  const Panel p{kGap + static_cast<double>(d) * (kPanel + kGap), lo, hi, n};
  svg += "<g class=\"scores\">\n" + frame(p, "anomaly score");
  if (!in.truth.empty()) svg += shading(p, in.truth);
  svg += polyline(p, in.scores, "score", "#2ca02c");
  if (in.delta) {
    svg += "<line class=\"threshold\" data-delta=\"" + num(*in.delta) + "\" x1=\"" + num(kLeft) + "\" x2=\"" +
           num(kWidth - kRight) + "\" y1=\"" + num(p.y(*in.delta)) + "\" y2=\"" + num(p.y(*in.delta)) +
           "\" stroke=\"#d62728\" stroke-dasharray=\"6 3\"/>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace tsinr
