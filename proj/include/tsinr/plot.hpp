#pragma once

// Minimal SVG line plots for series, reconstructions and score traces.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinr/tensor.hpp"

namespace tsinr {

struct PlotInput {
  Tensor data;                   // [d x n] raw channels
  std::optional<Tensor> recon;   // same shape, optional
  std::vector<double> scores;    // n values
  std::vector<int> truth;        // n labels or empty
  std::optional<double> delta;   // threshold line on the score panel
  std::vector<std::string> channel_names;
};

/// One panel per channel plus a final score panel. True anomaly segments are
/// drawn as rects with class "truth" in every panel, the threshold as a line
/// with class "threshold".
std::string render_svg(const PlotInput& input);

}  // namespace tsinr
