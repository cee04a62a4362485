#include "tsinr/inr.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tsinr/errors.hpp"

namespace tsinr {

std::vector<GroupSpec> partition_channels(std::size_t channels, std::size_t groups, std::size_t hidden_width) {
  if (channels == 0) throw ConfigError("channel count must be positive");
  if (groups == 0) throw ConfigError("group count must be positive");
  const std::size_t k = std::min(groups, channels);
  const std::size_t chunk = (channels + k - 1) / k;
  std::vector<GroupSpec> out;
  for (std::size_t first = 0; first < channels; first += chunk)
    out.push_back({first, std::min(chunk, channels - first), hidden_width});
  return out;
}

// -- InrLayout -------------------------------------------------------------------

InrLayout::InrLayout(InrConfig config)
    : InrLayout(config, partition_channels(config.channels, config.groups, config.group_width)) {}

InrLayout::InrLayout(InrConfig config, std::vector<GroupSpec> groups)
    : config_(config), groups_(std::move(groups)) {
  if (config_.channels == 0) throw ConfigError("channel count must be positive");
  if (config_.window < 2) throw ConfigError("window length must be at least 2");
  if (config_.group_layers == 0) throw ConfigError("at least one group layer is required");
  if (config_.global_width == 0 || config_.group_width == 0) throw ConfigError("layer widths must be positive");
  if (groups_.empty()) throw ConfigError("at least one group is required");
  std::size_t next = 0;
  for (const auto& g : groups_) {
    if (g.first_channel != next || g.channel_count == 0)
      throw ConfigError("groups must partition the channels contiguously");
    if (config_.group_layers > 1 && g.hidden_width == 0) throw ConfigError("group hidden width must be positive");
    next += g.channel_count;
  }
  if (next != config_.channels)
    throw ConfigError("group outputs cover " + std::to_string(next) + " channels, expected " +
                      std::to_string(config_.channels));
  config_.groups = groups_.size();
  build();
}

void InrLayout::build() {
  const std::size_t d = config_.channels;
  const std::size_t width = config_.global_width;
  if (config_.trend) {
    trend_index_ = blocks_.size();
    blocks_.push_back({"trend", {config_.trend_degree + 1, d}});
  }
  if (config_.seasonal) {
    seasonal_index_ = blocks_.size();
    blocks_.push_back({"seasonal", {2 * frequencies(), d}});
  }
  input_proj_index_ = blocks_.size();
  blocks_.push_back({"input_proj", {1, width}});
  for (std::size_t m = 0; m < config_.global_layers; ++m) {
    global_index_.push_back(blocks_.size());
    blocks_.push_back({"global." + std::to_string(m) + ".w", {width, width}});
    blocks_.push_back({"global." + std::to_string(m) + ".b", {1, width}});
  }
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    group_index_.push_back(blocks_.size());
    std::size_t in = width;
    for (std::size_t l = 0; l < config_.group_layers; ++l) {
      const bool last = l + 1 == config_.group_layers;
      const std::size_t out = last ? groups_[i].channel_count : groups_[i].hidden_width;
      const std::string prefix = "group." + std::to_string(i) + "." + std::to_string(l);
      blocks_.push_back({prefix + ".w", {in, out}});
      blocks_.push_back({prefix + ".b", {1, out}});
      in = out;
    }
  }
}

std::size_t InrLayout::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += shape_numel(b.shape);
  return n;
}

std::size_t InrLayout::group_weight_index(std::size_t group, std::size_t layer) const {
  if (layer >= config_.group_layers) throw std::out_of_range("group layer index out of range");
  return group_index_.at(group) + 2 * layer;
}

bool InrLayout::operator==(const InrLayout& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name != other.blocks_[i].name || blocks_[i].shape != other.blocks_[i].shape) return false;
  return config_.window == other.config_.window && config_.channels == other.config_.channels;
}

// -- InrWeights ------------------------------------------------------------------

InrWeights::InrWeights(InrLayout layout, std::vector<Tensor> blocks)
    : layout_(std::move(layout)), blocks_(std::move(blocks)) {
  const auto& spec = layout_.blocks();
  if (blocks_.size() != spec.size())
    throw ConfigError("expected " + std::to_string(spec.size()) + " weight blocks, got " +
                      std::to_string(blocks_.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!blocks_[i].defined() || blocks_[i].shape() != spec[i].shape)
      throw ConfigError("weight block '" + spec[i].name + "' must have shape " + shape_to_string(spec[i].shape) +
                        (blocks_[i].defined() ? ", got " + shape_to_string(blocks_[i].shape()) : ""));
  }
}

InrWeights InrWeights::zeros(const InrLayout& layout) {
  std::vector<Tensor> blocks;
  for (const auto& b : layout.blocks()) blocks.push_back(Tensor::zeros(b.shape));
  return InrWeights(layout, std::move(blocks));
}

InrWeights InrWeights::random(const InrLayout& layout, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<Tensor> blocks;
  for (const auto& b : layout.blocks()) {
    std::vector<double> v(shape_numel(b.shape));
    for (double& x : v) x = dist(rng);
    blocks.push_back(Tensor::from(b.shape, std::move(v)));
  }
  return InrWeights(layout, std::move(blocks));
}

const Tensor* InrWeights::trend() const {
  auto idx = layout_.trend_index();
  return idx ? &blocks_[*idx] : nullptr;
}

const Tensor* InrWeights::seasonal() const {
  auto idx = layout_.seasonal_index();
  return idx ? &blocks_[*idx] : nullptr;
}

std::vector<double> InrWeights::flatten() const {
  std::vector<double> out;
  out.reserve(layout_.parameter_count());
  for (const auto& b : blocks_) out.insert(out.end(), b.data().begin(), b.data().end());
  return out;
}

// -- TimestampGrid -----------------------------------------------------------------

TimestampGrid TimestampGrid::window(std::size_t length) {
  if (length == 0) throw ConfigError("timestamp grid must be non-empty");
  std::vector<double> v(length);
  for (std::size_t j = 0; j < length; ++j) v[j] = static_cast<double>(j) / static_cast<double>(length);
  return TimestampGrid(std::move(v));
}

TimestampGrid TimestampGrid::from_values(std::vector<double> values) {
  if (values.empty()) throw ConfigError("timestamp grid must be non-empty");
  for (std::size_t j = 1; j < values.size(); ++j)
    if (!(values[j] > values[j - 1])) throw ConfigError("timestamps must be strictly increasing");
  return TimestampGrid(std::move(values));
}

Tensor TimestampGrid::column() const { return Tensor::from({values_.size(), 1}, values_); }

// -- evaluation ------------------------------------------------------------------

Tensor trend_basis(const TimestampGrid& grid, std::size_t degree) {
  const std::size_t n = grid.size();
  const std::size_t cols = degree + 1;
  std::vector<double> v(n * cols);
  for (std::size_t j = 0; j < n; ++j) {
    double power = 1.0;
    for (std::size_t i = 0; i < cols; ++i) {
      v[j * cols + i] = power;
      power *= grid.values()[j];
    }
  }
  return Tensor::from({n, cols}, std::move(v));
}

Tensor seasonal_basis(const TimestampGrid& grid, std::size_t frequencies) {
  const std::size_t n = grid.size();
  const std::size_t cols = 2 * frequencies;
  std::vector<double> v(n * cols);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < frequencies; ++i) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) * grid.values()[j];
      v[j * cols + i] = std::cos(angle);
      v[j * cols + frequencies + i] = std::sin(angle);
    }
  }
  return Tensor::from({n, cols}, std::move(v));
}

namespace {

// Each component is computed timestamp-major ([T x d]) and transposed at the end.

Tensor trend_td(const InrWeights& w, const TimestampGrid& grid) {
  const Tensor* coeffs = w.trend();
  if (coeffs == nullptr) return Tensor::zeros({grid.size(), w.layout().channels()});
  return matmul(trend_basis(grid, w.layout().config().trend_degree), *coeffs);
}

Tensor seasonal_td(const InrWeights& w, const TimestampGrid& grid) {
  const Tensor* coeffs = w.seasonal();
  if (coeffs == nullptr) return Tensor::zeros({grid.size(), w.layout().channels()});
  return matmul(seasonal_basis(grid, w.layout().frequencies()), *coeffs);
}

Tensor residual_td(const InrWeights& w, const TimestampGrid& grid) {
  const InrLayout& layout = w.layout();
  Tensor q = matmul(grid.column(), w.input_proj());
  for (std::size_t m = 0; m < layout.config().global_layers; ++m)
    q = relu(add(matmul(q, w.global_weight(m)), w.global_bias(m)));

  const std::size_t n_layers = layout.config().group_layers;
  std::vector<Tensor> outputs;
  outputs.reserve(layout.groups().size());
  for (std::size_t i = 0; i < layout.groups().size(); ++i) {
    Tensor h = q;
    for (std::size_t l = 0; l < n_layers; ++l) {
      h = add(matmul(h, w.group_weight(i, l)), w.group_bias(i, l));
      if (l + 1 < n_layers) h = relu(h);
    }
    outputs.push_back(h);
  }
  return concat_cols(outputs);
}

}  // namespace

Tensor eval_trend(const InrWeights& w, const TimestampGrid& grid) { return transpose(trend_td(w, grid)); }
Tensor eval_seasonal(const InrWeights& w, const TimestampGrid& grid) { return transpose(seasonal_td(w, grid)); }
Tensor eval_residual(const InrWeights& w, const TimestampGrid& grid) { return transpose(residual_td(w, grid)); }

Tensor eval_inr(const InrWeights& w, const TimestampGrid& grid) {
  return transpose(add(add(trend_td(w, grid), seasonal_td(w, grid)), residual_td(w, grid)));
}

// -- ablation ----------------------------------------------------------------------

namespace {

std::vector<double> block_diagonal(const std::vector<const Tensor*>& parts, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols, 0.0);
  std::size_t r0 = 0, c0 = 0;
  for (const Tensor* p : parts) {
    const std::size_t r = p->rows(), c = p->cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[(r0 + i) * cols + c0 + j] = p->at(i, j);
    r0 += r;
    c0 += c;
  }
  return out;
}

}  // namespace

InrWeights ablate(const InrWeights& w, const AblationFlags& flags) {
  const InrLayout& old = w.layout();
  InrConfig cfg = old.config();
  cfg.trend = cfg.trend && flags.trend;
  cfg.seasonal = cfg.seasonal && flags.seasonal;

  const bool merge = !flags.group_based && old.groups().size() > 1;
  std::vector<GroupSpec> groups = old.groups();
  if (merge) {
    std::size_t hidden = 0;
    for (const auto& g : old.groups()) hidden += g.hidden_width;
    groups = {{0, cfg.channels, hidden}};
  }
  InrLayout layout(cfg, groups);

  std::vector<Tensor> blocks;
  if (cfg.trend) blocks.push_back(w.trend()->clone());
  if (cfg.seasonal) blocks.push_back(w.seasonal()->clone());
  blocks.push_back(w.input_proj().clone());
  for (std::size_t m = 0; m < cfg.global_layers; ++m) {
    blocks.push_back(w.global_weight(m).clone());
    blocks.push_back(w.global_bias(m).clone());
  }
  if (!merge) {
    for (std::size_t i = 0; i < old.groups().size(); ++i)
      for (std::size_t l = 0; l < cfg.group_layers; ++l) {
        blocks.push_back(w.group_weight(i, l).clone());
        blocks.push_back(w.group_bias(i, l).clone());
      }
  } else {
    const std::size_t k = old.groups().size();
    for (std::size_t l = 0; l < cfg.group_layers; ++l) {
      std::vector<Tensor> weights, biases;
      std::vector<const Tensor*> diag;
      for (std::size_t i = 0; i < k; ++i) {
        weights.push_back(w.group_weight(i, l));
        biases.push_back(w.group_bias(i, l));
        diag.push_back(&w.group_weight(i, l));
      }
      const Shape& shape = layout.blocks()[layout.group_weight_index(0, l)].shape;
      if (l == 0)
        blocks.push_back(concat_cols(weights).detach());
      else
        blocks.push_back(Tensor::from(shape, block_diagonal(diag, shape[0], shape[1])));
      blocks.push_back(concat_cols(biases).detach());
    }
  }
  return InrWeights(std::move(layout), std::move(blocks));
}

}  // namespace tsinr
