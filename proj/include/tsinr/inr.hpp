#pragma once

// Decomposed implicit neural representation of one window:
//
//   f(t) = f_trend(t) + f_seasonal(t) + f_residual(t)
//
// evaluated on window-relative timestamps t_j = j / T. The residual part is a
// ReLU MLP on a lifted timestamp: shared global layers followed by k
// independent group stacks whose outputs concatenate to the d channels.
//
// Layer weights are stored input-major ([in x out]) and applied as q * W + b.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinr/tensor.hpp"

namespace tsinr {

struct InrConfig {
  std::size_t channels = 1;       // d
  std::size_t window = 100;       // T
  std::size_t trend_degree = 3;   // p
  std::size_t global_layers = 3;  // M
  std::size_t group_layers = 2;   // N
  std::size_t groups = 1;         // requested k; clamped to the channel count
  std::size_t global_width = 64;
  std::size_t group_width = 32;
  bool trend = true;
  bool seasonal = true;
};

struct GroupSpec {
  std::size_t first_channel = 0;
  std::size_t channel_count = 0;
  std::size_t hidden_width = 0;
};

struct WeightBlock {
  std::string name;
  Shape shape;
};

/// Block structure of an InrWeights set. Construction validates every width
/// invariant, so a layout that exists is always evaluable.
class InrLayout {
 public:
  explicit InrLayout(InrConfig config);
  /// Layout with explicit group partition (used when collapsing groups).
  InrLayout(InrConfig config, std::vector<GroupSpec> groups);

  const InrConfig& config() const { return config_; }
  std::size_t channels() const { return config_.channels; }
  std::size_t window() const { return config_.window; }
  /// Number of Fourier frequencies, floor(T / 2).
  std::size_t frequencies() const { return config_.window / 2; }
  const std::vector<GroupSpec>& groups() const { return groups_; }

  const std::vector<WeightBlock>& blocks() const { return blocks_; }
  std::size_t parameter_count() const;

  std::optional<std::size_t> trend_index() const { return trend_index_; }
  std::optional<std::size_t> seasonal_index() const { return seasonal_index_; }
  std::size_t input_proj_index() const { return input_proj_index_; }
  std::size_t global_weight_index(std::size_t layer) const { return global_index_.at(layer); }
  std::size_t global_bias_index(std::size_t layer) const { return global_index_.at(layer) + 1; }
  std::size_t group_weight_index(std::size_t group, std::size_t layer) const;
  std::size_t group_bias_index(std::size_t group, std::size_t layer) const {
    return group_weight_index(group, layer) + 1;
  }

  bool operator==(const InrLayout& other) const;

 private:
  void build();

  InrConfig config_;
  std::vector<GroupSpec> groups_;
  std::vector<WeightBlock> blocks_;
  std::optional<std::size_t> trend_index_;
  std::optional<std::size_t> seasonal_index_;
  std::size_t input_proj_index_ = 0;
  std::vector<std::size_t> global_index_;
  std::vector<std::size_t> group_index_;  // first block of each group
};

/// Contiguous channel partition: blocks of ceil(d / k) channels, the last one
/// possibly smaller. May yield fewer than k groups when d is not divisible.
std::vector<GroupSpec> partition_channels(std::size_t channels, std::size_t groups, std::size_t hidden_width);

class InrWeights {
 public:
  /// Throws ConfigError when a block's shape disagrees with the layout.
  InrWeights(InrLayout layout, std::vector<Tensor> blocks);

  static InrWeights zeros(const InrLayout& layout);
  /// Uniform(-scale, scale) entries from a seeded generator.
  static InrWeights random(const InrLayout& layout, std::uint64_t seed, double scale);

  const InrLayout& layout() const { return layout_; }
  std::span<const Tensor> blocks() const { return blocks_; }
  const Tensor& block(std::size_t i) const { return blocks_.at(i); }
  Tensor& block(std::size_t i) { return blocks_.at(i); }

  const Tensor* trend() const;
  const Tensor* seasonal() const;
  const Tensor& input_proj() const { return blocks_[layout_.input_proj_index()]; }
  const Tensor& global_weight(std::size_t m) const { return blocks_[layout_.global_weight_index(m)]; }
  const Tensor& global_bias(std::size_t m) const { return blocks_[layout_.global_bias_index(m)]; }
  const Tensor& group_weight(std::size_t i, std::size_t l) const { return blocks_[layout_.group_weight_index(i, l)]; }
  const Tensor& group_bias(std::size_t i, std::size_t l) const { return blocks_[layout_.group_bias_index(i, l)]; }

  /// All block values concatenated in layout order.
  std::vector<double> flatten() const;

 private:
  InrLayout layout_;
  std::vector<Tensor> blocks_;
};

/// Strictly increasing evaluation timestamps.
class TimestampGrid {
 public:
  /// t_j = j / T for j = 0..T-1.
  static TimestampGrid window(std::size_t length);
  static TimestampGrid from_values(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  /// [T x 1] column tensor of the timestamps.
  Tensor column() const;

 private:
  explicit TimestampGrid(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

/// [T x (p+1)] matrix of monomials t^i, built by repeated multiplication.
Tensor trend_basis(const TimestampGrid& grid, std::size_t degree);
/// [T x 2F] matrix: cos(2 pi i t) in columns 0..F-1, sin(2 pi i t) in F..2F-1.
Tensor seasonal_basis(const TimestampGrid& grid, std::size_t frequencies);

// Component evaluators, each returning [d x T]. Absent components evaluate to
// zero.
Tensor eval_trend(const InrWeights& w, const TimestampGrid& grid);
Tensor eval_seasonal(const InrWeights& w, const TimestampGrid& grid);
Tensor eval_residual(const InrWeights& w, const TimestampGrid& grid);
/// (trend + seasonal) + residual, summed in that order.
Tensor eval_inr(const InrWeights& w, const TimestampGrid& grid);

struct AblationFlags {
  bool trend = true;
  bool seasonal = true;
  bool group_based = true;
};

/// Drops disabled decomposition blocks. With group_based off the groups are
/// merged into one group whose hidden width is the sum of the group widths
/// (stacked first layer, block-diagonal later layers), which leaves the
/// residual function unchanged while removing the group structure.
InrWeights ablate(const InrWeights& w, const AblationFlags& flags);

}  // namespace tsinr
