#include "tsinr/transformer.hpp"

#include <cmath>
#include <vector>

#include "tsinr/errors.hpp"

namespace tsinr {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

Tensor layer_norm(const Tensor& x, const LayerNormParams& p, double eps) {
  return add(mul(normalize_lastdim(x, eps), p.gain), p.bias);
}

Tensor multi_head_attention(const AttentionParams& p, const Tensor& x, std::size_t seq_len) {
  const std::size_t rows = x.rows();
  const std::size_t width = x.cols();
  if (seq_len == 0 || rows % seq_len != 0)
    throw DimensionError("attention: " + std::to_string(rows) + " rows do not split into sequences of " +
                         std::to_string(seq_len));
  if (p.heads == 0 || width % p.heads != 0)
    throw DimensionError("attention: width " + std::to_string(width) + " not divisible by " +
                         std::to_string(p.heads) + " heads");
  const std::size_t head_dim = width / p.heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const Tensor q = linear(x, p.wq, p.bq);
  const Tensor k = linear(x, p.wk, p.bk);
  const Tensor v = linear(x, p.wv, p.bv);

  std::vector<Tensor> sequences;
  for (std::size_t s = 0; s < rows / seq_len; ++s) {
    const Tensor qs = slice_rows(q, s * seq_len, seq_len);
    const Tensor ks = slice_rows(k, s * seq_len, seq_len);
    const Tensor vs = slice_rows(v, s * seq_len, seq_len);
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < p.heads; ++h) {
      const Tensor qh = slice_cols(qs, h * head_dim, head_dim);
      const Tensor kh = slice_cols(ks, h * head_dim, head_dim);
      const Tensor vh = slice_cols(vs, h * head_dim, head_dim);
      const Tensor weights = softmax_lastdim(scale(matmul(qh, transpose(kh)), scale_factor));
      heads.push_back(matmul(weights, vh));
    }
    sequences.push_back(p.heads == 1 ? heads.front() : concat_cols(heads));
  }
  const Tensor merged = sequences.size() == 1 ? sequences.front() : concat_rows(sequences);
  return linear(merged, p.wo, p.bo);
}

Tensor feed_forward(const FeedForwardParams& p, const Tensor& x) {
  return linear(relu(linear(x, p.w1, p.b1)), p.w2, p.b2);
}

Tensor encoder_block(const EncoderBlock& block, const Tensor& x, std::size_t seq_len, double eps) {
  const Tensor h = add(x, multi_head_attention(block.attention, layer_norm(x, block.norm1, eps), seq_len));
  return add(h, feed_forward(block.feed_forward, layer_norm(h, block.norm2, eps)));
}

}  // namespace tsinr
