#pragma once

// Training configuration, normalization, the end-to-end model (encoder ->
// hypernetwork -> INR) and the Adam training loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsinr/encoder.hpp"
#include "tsinr/hypernet.hpp"
#include "tsinr/inr.hpp"
#include "tsinr/tensor.hpp"

namespace tsinr {

struct TrainConfig {
  std::size_t window_T = 100;
  std::size_t patch_P = 10;
  double lr = 1e-4;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double gamma = 1.0;  // percent
  std::size_t trend_degree = 3;
  std::size_t global_layers = 3;
  std::size_t group_layers = 2;
  std::size_t groups = 5;  // clamped to the channel count
  std::size_t global_width = 64;
  std::size_t group_width = 32;
  std::size_t model_width = 128;
  std::size_t heads = 4;
  std::size_t blocks = 6;
  bool decomposition = true;
  bool group_based = true;
  std::string encoder = "auto";  // auto, identity, random, external
  std::size_t train_stride = 0;  // 0 means window_T

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::size_t effective_train_stride() const { return train_stride ? train_stride : window_T; }
  /// "auto" picks random for multivariate and identity for univariate data.
  EncoderKind resolved_encoder(std::size_t channels) const;
  InrConfig inr_config(std::size_t channels) const;
  HyperNetConfig hypernet_config(std::size_t channels) const;
};

/// JSON object whose keys mirror the TrainConfig field names; unknown keys are
/// rejected. Values missing from the document keep those of `base`.
TrainConfig config_from_json(const std::string& text, const TrainConfig& base = {});
std::string config_to_json(const TrainConfig& config);
/// FNV-1a of the canonical JSON form.
std::uint64_t config_hash(const TrainConfig& config);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;  // floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;
  /// Per-channel statistics of a [d x length] series.
  static NormStats fit(const Tensor& series);
  /// Statistics pooled over several same-height [d x n_i] tensors.
  static NormStats fit(std::span<const Tensor> parts);
  std::size_t channels() const { return mean.size(); }
};

Tensor normalize(const Tensor& x, const NormStats& stats);
Tensor denormalize(const Tensor& x, const NormStats& stats);

/// One training or scoring example: hypernetwork input and reconstruction target.
struct Example {
  Tensor input;   // normalized encoder features [d x T]
  Tensor target;  // normalized raw window [d x T]
  std::size_t start = 0;
};

class Model {
 public:
  /// Fresh model for d-channel data; normalization stays unset until fit_normalization().
  Model(TrainConfig config, std::size_t channels);

  const TrainConfig& config() const { return config_; }
  std::size_t channels() const { return channels_; }
  EncoderKind encoder_kind() const { return encoder_kind_; }
  const FeatureEncoder& encoder() const { return encoder_; }
  HyperNet& hypernet() { return hypernet_; }
  const HyperNet& hypernet() const { return hypernet_; }
  const NormStats& raw_stats() const { return raw_stats_; }
  const NormStats& feature_stats() const { return feature_stats_; }
  void set_stats(NormStats raw, NormStats feature);

  /// Raw stats from the series itself, feature stats from encoding its
  /// stride-T windows.
  void fit_normalization(const Tensor& train_series);

  Example make_example(const Tensor& raw_window, std::size_t start = 0) const;
  std::vector<Example> make_examples(const Tensor& series, std::size_t stride) const;

  /// Weights emitted for a batch of examples (records on the active tape, if any).
  std::vector<InrWeights> emit(std::span<const Example> batch) const;
  /// Normalized-space reconstruction of every example, without a tape.
  std::vector<Tensor> reconstruct(std::span<const Example> examples) const;

  struct SeriesResult {
    std::vector<double> scores;  // one per timestamp
    Tensor reconstruction;       // raw units, [d x length]
    double mse = 0.0;            // mean squared error in normalized units
  };
  /// Stride-T windows plus an end-aligned window for any leftover tail.
  SeriesResult score_series(const Tensor& series) const;

 private:
  TrainConfig config_;
  std::size_t channels_;
  EncoderKind encoder_kind_;
  FeatureEncoder encoder_;
  HyperNet hypernet_;
  NormStats raw_stats_;
  NormStats feature_stats_;
};

/// mean over windows, channels and timestamps of (target - f(t))^2, summed in
/// example order.
Tensor reconstruction_loss(const Model& model, std::span<const Example> batch);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `param` in place; `step` counts from 1.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::size_t step, const AdamConfig& config);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);
  /// Applies one update from the params' current grads (missing grads count as zero).
  void step();
  void zero_grad();
  std::size_t steps() const { return steps_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig config_;
  std::size_t steps_ = 0;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

class Trainer {
 public:
  Trainer(Model& model, std::vector<Example> examples);

  /// Forward, backward and one Adam update on the given examples. Throws
  /// NumericError (with the step index) when the loss is not finite.
  double train_step(std::span<const Example> batch);
  /// train_step on examples[indices].
  double train_step_indices(std::span<const std::size_t> indices);

  /// Shuffled mini-batch epochs; the shuffle is seeded from the config seed.
  std::vector<EpochStats> fit(std::size_t epochs, const std::function<void(const EpochStats&)>& on_epoch = {});

  std::size_t steps() const { return optimizer_.steps(); }
  const std::vector<Example>& examples() const { return examples_; }

 private:
  Model& model_;
  std::vector<Example> examples_;
  Adam optimizer_;
  std::uint64_t shuffle_seed_;
  std::size_t epochs_done_ = 0;
};

}  // namespace tsinr
