#pragma once

// Pre-norm transformer encoder pieces operating on stacked token matrices.
// A stacked matrix holds `batch` sequences of `seq_len` tokens each, row-major
// ([batch * seq_len x width]); attention never crosses sequence boundaries.

#include <cstddef>

#include "tsinr/tensor.hpp"

namespace tsinr {

struct LayerNormParams {
  Tensor gain;  // [1 x D]
  Tensor bias;  // [1 x D]
};

struct AttentionParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // [D x D] weights, [1 x D] biases
  std::size_t heads = 1;
};

struct FeedForwardParams {
  Tensor w1, b1;  // [D x F], [1 x F]
  Tensor w2, b2;  // [F x D], [1 x D]
};

struct EncoderBlock {
  LayerNormParams norm1;
  AttentionParams attention;
  LayerNormParams norm2;
  FeedForwardParams feed_forward;
};

/// x * w + b with b broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor layer_norm(const Tensor& x, const LayerNormParams& p, double eps);

/// Scaled dot-product multi-head self-attention, including the output projection.
Tensor multi_head_attention(const AttentionParams& p, const Tensor& x, std::size_t seq_len);

Tensor feed_forward(const FeedForwardParams& p, const Tensor& x);

/// x + attn(norm1(x)), then h + ffn(norm2(h)).
Tensor encoder_block(const EncoderBlock& block, const Tensor& x, std::size_t seq_len, double eps);

}  // namespace tsinr
