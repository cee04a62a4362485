#pragma once

// Transformer hypernetwork: one forward pass turns a (feature-encoded,
// normalized) window into a complete InrWeights set.
//
//   window [d x T] -> patches [T/P x d*P] -> data tokens (+ positions)
//   data tokens ++ learned INR tokens (one per weight block)
//   -> encoder blocks -> final norm -> head g reads INR token g -> block g

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tsinr/inr.hpp"
#include "tsinr/tensor.hpp"
#include "tsinr/transformer.hpp"

namespace tsinr {

struct HyperNetConfig {
  InrConfig inr;
  std::size_t patch = 10;
  std::size_t width = 128;
  std::size_t heads = 4;
  std::size_t blocks = 6;
  std::size_t ffn_multiplier = 4;
  double norm_eps = 1e-5;
  std::uint64_t seed = 0;
};

/// Stacked token matrix for `batch` windows; in every sequence the first
/// `boundary` rows are data tokens and the rest are INR tokens.
struct TokenSequence {
  Tensor tokens;  // [batch * seq_len x D]
  std::size_t boundary = 0;
  std::size_t seq_len = 0;
  std::size_t batch = 1;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Splits [d x T] into T/P patches; patch j holds timestamps [jP, (j+1)P) of
/// channel 0, then of channel 1, and so on.
Tensor patchify(const Tensor& window, std::size_t patch);

class HyperNet {
 public:
  explicit HyperNet(HyperNetConfig config);
  HyperNet(const HyperNet& other);
  HyperNet& operator=(const HyperNet& other);
  HyperNet(HyperNet&&) noexcept = default;
  HyperNet& operator=(HyperNet&&) noexcept = default;

  const HyperNetConfig& config() const { return config_; }
  const InrLayout& layout() const { return layout_; }
  std::size_t data_tokens() const { return config_.inr.window / config_.patch; }
  std::size_t inr_tokens() const { return layout_.blocks().size(); }

  TokenSequence embed(std::span<const Tensor> patches) const;
  TokenSequence encode_tokens(const TokenSequence& seq) const;
  std::vector<InrWeights> emit_weights(const TokenSequence& seq) const;

  InrWeights forward(const Tensor& window) const;
  std::vector<InrWeights> forward_batch(std::span<const Tensor> windows) const;

  /// Handles to every learnable array in a fixed order; the handles alias the
  /// network's storage.
  std::vector<NamedTensor> parameters() const;
  std::size_t parameter_count() const;

  // Direct access for tests and checkpoint loading.
  Tensor& patch_weight() { return patch_w_; }
  Tensor& positions() { return positions_; }
  Tensor& inr_token_table() { return inr_tokens_; }
  std::vector<EncoderBlock>& encoder() { return blocks_; }
  Tensor& head_weight(std::size_t g) { return head_w_.at(g); }
  Tensor& head_bias(std::size_t g) { return head_b_.at(g); }

 private:
  void for_each_param(const std::function<void(const std::string&, Tensor&)>& fn);
  void init_parameters();

  HyperNetConfig config_;
  InrLayout layout_;
  Tensor patch_w_, patch_b_;  // [dP x D], [1 x D]
  Tensor positions_;          // [T/P x D]
  Tensor inr_tokens_;         // [G x D]
  std::vector<EncoderBlock> blocks_;
  LayerNormParams final_norm_;
  std::vector<Tensor> head_w_, head_b_;  // [D x |block g|], [1 x |block g|]
};

}  // namespace tsinr
