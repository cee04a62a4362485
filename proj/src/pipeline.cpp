#include "tsinr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "tsinr/datasets.hpp"
#include "tsinr/detection.hpp"
#include "tsinr/errors.hpp"

namespace tsinr {

// -- TrainConfig -------------------------------------------------------------------

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(window_T, "window_T");
  positive(patch_P, "patch_P");
  positive(epochs, "epochs");
  positive(batch_size, "batch_size");
  positive(groups, "groups");
  positive(global_width, "global_width");
  positive(group_width, "group_width");
  positive(group_layers, "group_layers");
  positive(model_width, "model_width");
  positive(heads, "heads");
  if (window_T < 2) throw ConfigError("window_T must be at least 2");
  if (window_T % patch_P != 0)
    throw ConfigError("window_T (" + std::to_string(window_T) + ") must be divisible by patch_P (" +
                      std::to_string(patch_P) + ")");
  if (model_width % heads != 0) throw ConfigError("model_width must be divisible by heads");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(gamma > 0.0) || gamma > 100.0) throw ConfigError("gamma must lie in (0, 100]");
  // Checkpoints store every scalar as a double.
  if (seed > (std::uint64_t{1} << 53)) throw ConfigError("seed must not exceed 2^53");
  if (encoder != "auto") parse_encoder_kind(encoder);
}

EncoderKind TrainConfig::resolved_encoder(std::size_t channels) const {
  if (encoder == "auto") return channels > 1 ? EncoderKind::random_frozen : EncoderKind::identity;
  return parse_encoder_kind(encoder);
}

InrConfig TrainConfig::inr_config(std::size_t channels) const {
  InrConfig c;
  c.channels = channels;
  c.window = window_T;
  c.trend_degree = trend_degree;
  c.global_layers = global_layers;
  c.group_layers = group_layers;
  c.global_width = global_width;
  c.trend = decomposition;
  c.seasonal = decomposition;
  const std::size_t k = partition_channels(channels, groups, group_width).size();
  if (group_based) {
    c.groups = groups;
    c.group_width = group_width;
  } else {
    // One group carrying the total hidden width of the grouped variant.
    c.groups = 1;
    c.group_width = group_width * k;
  }
  return c;
}

HyperNetConfig TrainConfig::hypernet_config(std::size_t channels) const {
  HyperNetConfig h;
  h.inr = inr_config(channels);
  h.patch = patch_P;
  h.width = model_width;
  h.heads = heads;
  h.blocks = blocks;
  h.seed = seed;
  return h;
}

namespace {

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["window_T"] = c.window_T;
  j["patch_P"] = c.patch_P;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["gamma"] = c.gamma;
  j["trend_degree"] = c.trend_degree;
  j["global_layers"] = c.global_layers;
  j["group_layers"] = c.group_layers;
  j["groups"] = c.groups;
  j["global_width"] = c.global_width;
  j["group_width"] = c.group_width;
  j["model_width"] = c.model_width;
  j["heads"] = c.heads;
  j["blocks"] = c.blocks;
  j["decomposition"] = c.decomposition;
  j["group_based"] = c.group_based;
  j["encoder"] = c.encoder;
  j["train_stride"] = c.train_stride;
  return j;
}

template <typename T>
void read_field(const nlohmann::json& j, const std::string& key, T& out) {
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError("config: '" + key + "' must be a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  } else {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("config: '" + key + "' must be a non-negative integer");
  }
  out = v.get<T>();
}

}  // namespace

TrainConfig config_from_json(const std::string& text, const TrainConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  TrainConfig c = base;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "window_T") read_field(j, k, c.window_T);
    else if (k == "patch_P") read_field(j, k, c.patch_P);
    else if (k == "lr") read_field(j, k, c.lr);
    else if (k == "epochs") read_field(j, k, c.epochs);
    else if (k == "batch_size") read_field(j, k, c.batch_size);
    else if (k == "seed") read_field(j, k, c.seed);
    else if (k == "gamma") read_field(j, k, c.gamma);
    else if (k == "trend_degree") read_field(j, k, c.trend_degree);
    else if (k == "global_layers") read_field(j, k, c.global_layers);
    else if (k == "group_layers") read_field(j, k, c.group_layers);
    else if (k == "groups") read_field(j, k, c.groups);
    else if (k == "global_width") read_field(j, k, c.global_width);
    else if (k == "group_width") read_field(j, k, c.group_width);
    else if (k == "model_width") read_field(j, k, c.model_width);
    else if (k == "heads") read_field(j, k, c.heads);
    else if (k == "blocks") read_field(j, k, c.blocks);
    else if (k == "decomposition") read_field(j, k, c.decomposition);
    else if (k == "group_based") read_field(j, k, c.group_based);
    else if (k == "encoder") read_field(j, k, c.encoder);
    else if (k == "train_stride") read_field(j, k, c.train_stride);
    else throw ConfigError("config: unknown key '" + k + "'");
  }
  return c;
}

std::string config_to_json(const TrainConfig& config) { return to_json(config).dump(2) + "\n"; }

std::uint64_t config_hash(const TrainConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// -- normalization -------------------------------------------------------------------

NormStats NormStats::fit(const Tensor& series) { return fit(std::span<const Tensor>(&series, 1)); }

NormStats NormStats::fit(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("NormStats::fit: no data");
  const std::size_t d = parts.front().rows();
  NormStats s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  std::size_t count = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.rows() != d) throw DimensionError("NormStats::fit: channel count mismatch");
    count += p.cols();
  }
  if (count == 0) throw ContractError("NormStats::fit: no timestamps");
  for (const Tensor& p : parts) {
    auto v = p.data();
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = 0; j < p.cols(); ++j) s.mean[c] += v[c * p.cols() + j];
  }
  for (double& m : s.mean) m /= static_cast<double>(count);
  for (const Tensor& p : parts) {
    auto v = p.data();
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = 0; j < p.cols(); ++j) {
        const double diff = v[c * p.cols() + j] - s.mean[c];
        s.std[c] += diff * diff;
      }
  }
  for (double& sd : s.std) sd = std::max(std::sqrt(sd / static_cast<double>(count)), kStdFloor);
  return s;
}

Tensor normalize(const Tensor& x, const NormStats& stats) {
  if (x.rank() != 2 || x.rows() != stats.channels())
    throw DimensionError("normalize: expected " + std::to_string(stats.channels()) + " channels, got " +
                         shape_to_string(x.shape()));
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < stats.channels(); ++c)
    for (std::size_t j = 0; j < n; ++j) out[c * n + j] = (out[c * n + j] - stats.mean[c]) / stats.std[c];
  return Tensor::from(x.shape(), std::move(out));
}

Tensor denormalize(const Tensor& x, const NormStats& stats) {
  if (x.rank() != 2 || x.rows() != stats.channels())
    throw DimensionError("denormalize: expected " + std::to_string(stats.channels()) + " channels, got " +
                         shape_to_string(x.shape()));
  const std::size_t n = x.cols();
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < stats.channels(); ++c)
    for (std::size_t j = 0; j < n; ++j) out[c * n + j] = out[c * n + j] * stats.std[c] + stats.mean[c];
  return Tensor::from(x.shape(), std::move(out));
}

// -- Model ----------------------------------------------------------------------------

namespace {

FeatureEncoder make_encoder(EncoderKind kind, std::uint64_t seed) {
  switch (kind) {
    case EncoderKind::identity: return FeatureEncoder::identity();
    case EncoderKind::random_frozen: return FeatureEncoder::random_frozen(seed);
    case EncoderKind::external: return FeatureEncoder::external_from_env();
  }
  throw ConfigError("unknown encoder kind");
}

const TrainConfig& validated(const TrainConfig& c) {
  c.validate();
  return c;
}

}  // namespace

Model::Model(TrainConfig config, std::size_t channels)
    : config_(validated(config)),
      channels_(channels),
      encoder_kind_(config_.resolved_encoder(channels)),
      encoder_(make_encoder(encoder_kind_, config_.seed)),
      hypernet_(config_.hypernet_config(channels)) {}

void Model::set_stats(NormStats raw, NormStats feature) {
  if (raw.channels() != channels_ || feature.channels() != channels_)
    throw DimensionError("model: normalization statistics have the wrong channel count");
  raw_stats_ = std::move(raw);
  feature_stats_ = std::move(feature);
}

void Model::fit_normalization(const Tensor& train_series) {
  if (train_series.rank() != 2 || train_series.rows() != channels_)
    throw DimensionError("model: expected " + std::to_string(channels_) + " channels, got " +
                         shape_to_string(train_series.shape()));
  raw_stats_ = NormStats::fit(train_series);
  const Tensor normalized = normalize(train_series, raw_stats_);
  std::vector<Tensor> features;
  for (std::size_t s : window_starts(normalized.cols(), config_.window_T, config_.window_T))
    features.push_back(encoder_.encode(slice_window(normalized, s, config_.window_T)));
  feature_stats_ = NormStats::fit(features);
}

Example Model::make_example(const Tensor& raw_window, std::size_t start) const {
  if (raw_stats_.channels() != channels_) throw ContractError("model: normalization statistics are not set");
  if (raw_window.rank() != 2 || raw_window.rows() != channels_ || raw_window.cols() != config_.window_T)
    throw DimensionError("model: expected window of shape " + shape_to_string({channels_, config_.window_T}) +
                         ", got " + shape_to_string(raw_window.shape()));
  Example e;
  e.target = normalize(raw_window, raw_stats_);
  e.input = normalize(encoder_.encode(e.target), feature_stats_);
  e.start = start;
  return e;
}

std::vector<Example> Model::make_examples(const Tensor& series, std::size_t stride) const {
  if (series.rank() != 2 || series.rows() != channels_)
    throw DimensionError("model: expected " + std::to_string(channels_) + " channels, got " +
                         shape_to_string(series.shape()));
  std::vector<Example> out;
  for (std::size_t s : window_starts(series.cols(), config_.window_T, stride))
    out.push_back(make_example(slice_window(series, s, config_.window_T), s));
  return out;
}

std::vector<InrWeights> Model::emit(std::span<const Example> batch) const {
  std::vector<Tensor> inputs;
  inputs.reserve(batch.size());
  for (const auto& e : batch) inputs.push_back(e.input);
  return hypernet_.forward_batch(inputs);
}

std::vector<Tensor> Model::reconstruct(std::span<const Example> examples) const {
  const TimestampGrid grid = TimestampGrid::window(config_.window_T);
  std::vector<Tensor> out;
  out.reserve(examples.size());
  for (std::size_t b = 0; b < examples.size(); b += config_.batch_size) {
    const std::size_t n = std::min(config_.batch_size, examples.size() - b);
    for (const auto& w : emit(examples.subspan(b, n))) out.push_back(eval_inr(w, grid).detach());
  }
  return out;
}

Model::SeriesResult Model::score_series(const Tensor& series) const {
  const std::size_t T = config_.window_T;
  if (series.rank() != 2 || series.rows() != channels_)
    throw DimensionError("model: expected " + std::to_string(channels_) + " channels, got " +
                         shape_to_string(series.shape()));
  const std::size_t n = series.cols();
  std::vector<Example> examples = make_examples(series, T);
  const std::size_t covered = examples.size() * T;
  if (covered < n) examples.push_back(make_example(slice_window(series, n - T, T), n - T));
  const std::vector<Tensor> recon = reconstruct(examples);

  const std::size_t d = channels_;
  std::vector<double> normalized_recon(d * n, 0.0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::size_t start = examples[i].start;
    // The tail window only owns the timestamps no stride window covered.
    const std::size_t from = i < examples.size() - 1 || covered >= n ? 0 : covered - start;
    auto r = recon[i].data();
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = from; j < T; ++j) normalized_recon[c * n + start + j] = r[c * T + j];
  }
  SeriesResult out;
  const Tensor recon_norm = Tensor::from({d, n}, std::move(normalized_recon));
  const Tensor target = normalize(series, raw_stats_);
  out.scores = anomaly_score(target, recon_norm);
  double total = 0.0;
  for (double s : out.scores) total += s;
  out.mse = total / static_cast<double>(n);
  out.reconstruction = denormalize(recon_norm, raw_stats_);
  return out;
}

// -- loss and optimizer --------------------------------------------------------------

Tensor reconstruction_loss(const Model& model, std::span<const Example> batch) {
  if (batch.empty()) throw ContractError("reconstruction_loss: empty batch");
  const TimestampGrid grid = TimestampGrid::window(model.config().window_T);
  const auto weights = model.emit(batch);
  Tensor total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Tensor err = sum(square(sub(eval_inr(weights[b], grid), batch[b].target)));
    total = b == 0 ? err : add(total, err);
  }
  const double count = static_cast<double>(batch.size() * batch[0].target.numel());
  return scale(total, 1.0 / count);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::size_t step, const AdamConfig& c) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw DimensionError("adam_update: buffer sizes differ");
  if (step == 0) throw ContractError("adam_update: step counts from 1");
  const double t = static_cast<double>(step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / correct1;
    const double vhat = v[i] / correct2;
    param[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<const double> g;
    if (p.has_grad()) {
      g = p.grad();
    } else {
      zeros.assign(p.numel(), 0.0);
      g = zeros;
    }
    adam_update(p.mutable_data(), g, m_[i], v_[i], steps_, config_);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

// -- Trainer ----------------------------------------------------------------------------

namespace {
std::vector<Tensor> parameter_handles(HyperNet& net) {
  std::vector<Tensor> out;
  for (auto& p : net.parameters()) out.push_back(p.value);
  return out;
}
}  // namespace

Trainer::Trainer(Model& model, std::vector<Example> examples)
    : model_(model),
      examples_(std::move(examples)),
      optimizer_(parameter_handles(model.hypernet()), AdamConfig{model.config().lr}),
      shuffle_seed_(model.config().seed ^ 0x5DEECE66DULL) {
  for (auto& p : model_.hypernet().parameters()) p.value.set_requires_grad(true);
}

double Trainer::train_step(std::span<const Example> batch) {
  optimizer_.zero_grad();
  Tape tape;
  double value = 0.0;
  {
    TapeScope scope(tape);
    const Tensor loss = reconstruction_loss(model_, batch);
    value = loss.item();
    if (!std::isfinite(value))
      throw NumericError("non-finite training loss at step " + std::to_string(optimizer_.steps() + 1),
                         optimizer_.steps() + 1);
    tape.backward(loss);
  }
  optimizer_.step();
  return value;
}

double Trainer::train_step_indices(std::span<const std::size_t> indices) {
  std::vector<Example> batch;
  batch.reserve(indices.size());
  for (std::size_t i : indices) batch.push_back(examples_.at(i));
  return train_step(batch);
}

std::vector<EpochStats> Trainer::fit(std::size_t epochs, const std::function<void(const EpochStats&)>& on_epoch) {
  if (examples_.empty()) throw ContractError("Trainer::fit: no training examples");
  std::vector<EpochStats> history;
  std::vector<std::size_t> order(examples_.size());
  const std::size_t batch = model_.config().batch_size;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(shuffle_seed_ + epochs_done_);
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = ++epochs_done_;
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t n = std::min(batch, order.size() - b);
      total += train_step_indices(std::span<const std::size_t>(order).subspan(b, n));
      ++stats.steps;
    }
    stats.mean_loss = total / static_cast<double>(stats.steps);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

}  // namespace tsinr
