#include "tsinr/hypernet.hpp"

#include <cmath>
#include <random>

#include "tsinr/errors.hpp"

namespace tsinr {

Tensor patchify(const Tensor& window, std::size_t patch) {
  if (window.rank() != 2) throw DimensionError("patchify: window must be [d x T]");
  const std::size_t d = window.rows();
  const std::size_t len = window.cols();
  if (patch == 0 || len % patch != 0)
    throw ConfigError("patchify: window length " + std::to_string(len) + " is not divisible by patch length " +
                      std::to_string(patch));
  const std::size_t n = len / patch;
  std::vector<double> out(n * d * patch);
  auto src = window.data();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t s = 0; s < patch; ++s) out[(j * d + c) * patch + s] = src[c * len + j * patch + s];
  return Tensor::from({n, d * patch}, std::move(out));
}

namespace {

struct Initializer {
  explicit Initializer(std::uint64_t seed) : rng(seed) {}

  Tensor uniform(Shape shape, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v));
  }

  Tensor normal(Shape shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from(std::move(shape), std::move(v));
  }

  std::mt19937_64 rng;
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

HyperNet::HyperNet(HyperNetConfig config) : config_(std::move(config)), layout_(config_.inr) {
  const auto& inr = config_.inr;
  if (config_.patch == 0 || inr.window % config_.patch != 0)
    throw ConfigError("window length " + std::to_string(inr.window) + " is not divisible by patch length " +
                      std::to_string(config_.patch));
  if (config_.width == 0 || config_.heads == 0 || config_.width % config_.heads != 0)
    throw ConfigError("model width must be a positive multiple of the head count");
  if (config_.ffn_multiplier == 0) throw ConfigError("feed-forward multiplier must be positive");
  init_parameters();
}

HyperNet::HyperNet(const HyperNet& other)
    : config_(other.config_),
      layout_(other.layout_),
      patch_w_(other.patch_w_),
      patch_b_(other.patch_b_),
      positions_(other.positions_),
      inr_tokens_(other.inr_tokens_),
      blocks_(other.blocks_),
      final_norm_(other.final_norm_),
      head_w_(other.head_w_),
      head_b_(other.head_b_) {
  for_each_param([](const std::string&, Tensor& t) { t = t.clone(); });
}

HyperNet& HyperNet::operator=(const HyperNet& other) {
  if (this != &other) {
    HyperNet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void HyperNet::init_parameters() {
  Initializer init(config_.seed);
  const std::size_t D = config_.width;
  const std::size_t F = D * config_.ffn_multiplier;
  const std::size_t patch_in = config_.inr.channels * config_.patch;
  auto ones = [](std::size_t n) { return Tensor::full({1, n}, 1.0); };
  auto zeros = [](std::size_t n) { return Tensor::zeros({1, n}); };

  patch_w_ = init.uniform({patch_in, D}, std::sqrt(3.0 / static_cast<double>(patch_in)));
  patch_b_ = zeros(D);
  positions_ = init.normal({data_tokens(), D}, 0.02);
  inr_tokens_ = init.normal({inr_tokens(), D}, 0.02);

  const double bound_d = std::sqrt(3.0 / static_cast<double>(D));
  const double bound_f = std::sqrt(3.0 / static_cast<double>(F));
  blocks_.clear();
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    EncoderBlock block;
    block.norm1 = {ones(D), zeros(D)};
    block.attention.heads = config_.heads;
    block.attention.wq = init.uniform({D, D}, bound_d);
    block.attention.bq = zeros(D);
    block.attention.wk = init.uniform({D, D}, bound_d);
    block.attention.bk = zeros(D);
    block.attention.wv = init.uniform({D, D}, bound_d);
    block.attention.bv = zeros(D);
    block.attention.wo = init.uniform({D, D}, bound_d);
    block.attention.bo = zeros(D);
    block.norm2 = {ones(D), zeros(D)};
    block.feed_forward.w1 = init.uniform({D, F}, bound_d);
    block.feed_forward.b1 = zeros(F);
    block.feed_forward.w2 = init.uniform({F, D}, bound_f);
    block.feed_forward.b2 = zeros(D);
    blocks_.push_back(std::move(block));
  }
  final_norm_ = {ones(D), zeros(D)};

  // Head biases start at a conventional initialization of the INR layer they
  // emit, so the untrained hypernetwork already yields a well-scaled MLP; the
  // token-dependent part starts at a tenth of that scale.
  head_w_.clear();
  head_b_.clear();
  const auto& layout_blocks = layout_.blocks();
  const std::string last_group_layer = "." + std::to_string(config_.inr.group_layers - 1) + ".w";
  for (std::size_t g = 0; g < layout_blocks.size(); ++g) {
    const WeightBlock& block = layout_blocks[g];
    const std::size_t size = shape_numel(block.shape);
    double base = 0.0;
    double spread = 0.05;
    if (block.name != "trend" && block.name != "seasonal") {
      const bool is_bias = ends_with(block.name, ".b");
      // A bias shares the fan-in of the weight block emitted just before it.
      const std::size_t fan_in = block.name == "input_proj" ? 1
                                 : is_bias                  ? layout_blocks[g - 1].shape[0]
                                                            : block.shape[0];
      const bool output_layer = block.name.rfind("group.", 0) == 0 &&
                                ends_with(block.name, last_group_layer);
      const double inv = 1.0 / std::sqrt(static_cast<double>(fan_in));
      base = (is_bias || output_layer || block.name == "input_proj") ? inv : std::sqrt(6.0) * inv;
      spread = 0.1 * base;
    }
    head_w_.push_back(init.uniform({D, size}, std::sqrt(3.0 / static_cast<double>(D)) * spread));
    head_b_.push_back(base > 0.0 ? init.uniform({1, size}, base) : Tensor::zeros({1, size}));
  }
}

void HyperNet::for_each_param(const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("patch.w", patch_w_);
  fn("patch.b", patch_b_);
  fn("positions", positions_);
  fn("inr_tokens", inr_tokens_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string p = "block." + std::to_string(b) + ".";
    auto& blk = blocks_[b];
    fn(p + "norm1.gain", blk.norm1.gain);
    fn(p + "norm1.bias", blk.norm1.bias);
    fn(p + "attn.wq", blk.attention.wq);
    fn(p + "attn.bq", blk.attention.bq);
    fn(p + "attn.wk", blk.attention.wk);
    fn(p + "attn.bk", blk.attention.bk);
    fn(p + "attn.wv", blk.attention.wv);
    fn(p + "attn.bv", blk.attention.bv);
    fn(p + "attn.wo", blk.attention.wo);
    fn(p + "attn.bo", blk.attention.bo);
    fn(p + "norm2.gain", blk.norm2.gain);
    fn(p + "norm2.bias", blk.norm2.bias);
    fn(p + "ffn.w1", blk.feed_forward.w1);
    fn(p + "ffn.b1", blk.feed_forward.b1);
    fn(p + "ffn.w2", blk.feed_forward.w2);
    fn(p + "ffn.b2", blk.feed_forward.b2);
  }
  fn("final_norm.gain", final_norm_.gain);
  fn("final_norm.bias", final_norm_.bias);
  for (std::size_t g = 0; g < head_w_.size(); ++g) {
    const std::string p = "head." + layout_.blocks()[g].name + ".";
    fn(p + "w", head_w_[g]);
    fn(p + "b", head_b_[g]);
  }
}

std::vector<NamedTensor> HyperNet::parameters() const {
  std::vector<NamedTensor> out;
  const_cast<HyperNet*>(this)->for_each_param(
      [&](const std::string& name, Tensor& t) { out.push_back({name, t}); });
  return out;
}

std::size_t HyperNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.value.numel();
  return n;
}

TokenSequence HyperNet::embed(std::span<const Tensor> patches) const {
  if (patches.empty()) throw ContractError("embed: no windows");
  const std::size_t n = data_tokens();
  const std::size_t patch_in = config_.inr.channels * config_.patch;
  for (const Tensor& p : patches)
    if (p.rank() != 2 || p.rows() != n || p.cols() != patch_in)
      throw DimensionError("embed: expected patches of shape " + shape_to_string({n, patch_in}) + ", got " +
                           shape_to_string(p.shape()));
  const Tensor stacked = patches.size() == 1 ? patches.front() : concat_rows(patches);
  const Tensor embedded = linear(stacked, patch_w_, patch_b_);

  std::vector<Tensor> parts;
  for (std::size_t b = 0; b < patches.size(); ++b) {
    const Tensor data = patches.size() == 1 ? embedded : slice_rows(embedded, b * n, n);
    parts.push_back(add(data, positions_));
    parts.push_back(inr_tokens_);
  }
  return {concat_rows(parts), n, n + inr_tokens(), patches.size()};
}

TokenSequence HyperNet::encode_tokens(const TokenSequence& seq) const {
  if (seq.tokens.cols() != config_.width) throw DimensionError("encode_tokens: token width mismatch");
  Tensor x = seq.tokens;
  for (const auto& block : blocks_) x = encoder_block(block, x, seq.seq_len, config_.norm_eps);
  return {x, seq.boundary, seq.seq_len, seq.batch};
}

std::vector<InrWeights> HyperNet::emit_weights(const TokenSequence& seq) const {
  const std::size_t G = inr_tokens();
  if (seq.seq_len != seq.boundary + G) throw DimensionError("emit_weights: sequence does not carry one token per block");
  std::vector<std::vector<Tensor>> blocks(seq.batch);
  std::vector<std::size_t> rows(seq.batch);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t b = 0; b < seq.batch; ++b) rows[b] = b * seq.seq_len + seq.boundary + g;
    const Tensor tokens = layer_norm(gather_rows(seq.tokens, rows), final_norm_, config_.norm_eps);
    const Tensor flat = linear(tokens, head_w_[g], head_b_[g]);
    const Shape& shape = layout_.blocks()[g].shape;
    for (std::size_t b = 0; b < seq.batch; ++b)
      blocks[b].push_back(reshape(seq.batch == 1 ? flat : slice_rows(flat, b, 1), shape));
  }
  std::vector<InrWeights> out;
  out.reserve(seq.batch);
  for (auto& b : blocks) out.emplace_back(layout_, std::move(b));
  return out;
}

std::vector<InrWeights> HyperNet::forward_batch(std::span<const Tensor> windows) const {
  std::vector<Tensor> patches;
  patches.reserve(windows.size());
  for (const Tensor& w : windows) {
    if (w.rank() != 2 || w.rows() != config_.inr.channels || w.cols() != config_.inr.window)
      throw DimensionError("hypernet: expected window of shape " +
                           shape_to_string({config_.inr.channels, config_.inr.window}) + ", got " +
                           shape_to_string(w.shape()));
    patches.push_back(patchify(w, config_.patch));
  }
  return emit_weights(encode_tokens(embed(patches)));
}

InrWeights HyperNet::forward(const Tensor& window) const {
  auto out = forward_batch(std::span<const Tensor>(&window, 1));
  return std::move(out.front());
}

}  // namespace tsinr
