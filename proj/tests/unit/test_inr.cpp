#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "support/test_support.hpp"
#include "tsinr/errors.hpp"
#include "tsinr/inr.hpp"

using namespace tsinr;

namespace {

InrConfig small_config(std::size_t d = 1, std::size_t groups = 1) {
  InrConfig c;
  c.channels = d;
  c.window = 8;
  c.trend_degree = 2;
  c.global_layers = 2;
  c.group_layers = 2;
  c.groups = groups;
  c.global_width = 6;
  c.group_width = 4;
  return c;
}

void set(InrWeights& w, std::size_t block, std::vector<double> values) {
  auto dst = w.block(block).mutable_data();
  ASSERT_EQ(dst.size(), values.size());
  std::copy(values.begin(), values.end(), dst.begin());
}

}  // namespace

TEST(Partition, ContiguousCeilBlocks) {
  auto g = partition_channels(7, 3, 4);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0].first_channel, 0u);
  EXPECT_EQ(g[0].channel_count, 3u);
  EXPECT_EQ(g[1].first_channel, 3u);
  EXPECT_EQ(g[2].channel_count, 1u);
  // ceil(5/4) = 2 gives three groups, not four
  EXPECT_EQ(partition_channels(5, 4, 1).size(), 3u);
  // k larger than d is clamped
  EXPECT_EQ(partition_channels(2, 9, 1).size(), 2u);
}

TEST(Layout, OutputWidthsSumToChannels) {
  InrLayout layout(small_config(5, 2));
  std::size_t total = 0;
  for (std::size_t i = 0; i < layout.groups().size(); ++i)
    total += layout.blocks()[layout.group_weight_index(i, 1)].shape[1];
  EXPECT_EQ(total, 5u);
  EXPECT_EQ(layout.frequencies(), 4u);
  EXPECT_EQ(layout.blocks()[*layout.seasonal_index()].shape, (Shape{8, 5}));
}

TEST(Layout, WrongBlockShapeRejectedAtConstruction) {
  InrLayout layout(small_config());
  std::vector<Tensor> blocks;
  for (const auto& b : layout.blocks()) blocks.push_back(Tensor::zeros(b.shape));
  blocks[layout.input_proj_index()] = Tensor::zeros({1, 5});
  EXPECT_THROW(InrWeights(layout, blocks), ConfigError);
  blocks.pop_back();
  EXPECT_THROW(InrWeights(layout, blocks), ConfigError);
}

TEST(Grid, WindowRelativeTimestamps) {
  auto g = TimestampGrid::window(4);
  EXPECT_EQ(std::vector<double>(g.values().begin(), g.values().end()), (std::vector<double>{0, 0.25, 0.5, 0.75}));
  EXPECT_THROW(TimestampGrid::from_values({0.1, 0.1}), ConfigError);
}

TEST(Trend, ConstantTerm) {
  InrLayout layout(small_config());
  auto w = InrWeights::zeros(layout);
  set(w, *layout.trend_index(), {1, 0, 0});
  Tensor y = eval_trend(w, TimestampGrid::window(8));
  for (double v : y.data()) EXPECT_EQ(v, 1.0);
}

TEST(Trend, IdentityMonomialAndPolynomial) {
  InrLayout layout(small_config());
  auto w = InrWeights::zeros(layout);
  auto grid = TimestampGrid::from_values({0.5});
  set(w, *layout.trend_index(), {0, 1, 0});
  EXPECT_EQ(eval_trend(w, grid).item(), 0.5);
  set(w, *layout.trend_index(), {1, 2, 3});
  EXPECT_EQ(eval_trend(w, grid).item(), 1.0 + 2.0 * 0.5 + 3.0 * 0.25);
}

TEST(Trend, PositiveSlopeIsStrictlyIncreasing) {
  InrConfig c = small_config();
  c.trend_degree = 1;
  InrLayout layout(c);
  auto w = InrWeights::zeros(layout);
  set(w, *layout.trend_index(), {-0.3, 0.7});
  Tensor y = eval_trend(w, TimestampGrid::window(50));
  for (std::size_t j = 1; j < 50; ++j) EXPECT_GT(y.at(j), y.at(j - 1));
}

TEST(Seasonal, ZeroAndDcTerm) {
  InrLayout layout(small_config());
  auto w = InrWeights::zeros(layout);
  auto grid = TimestampGrid::window(8);
  for (const Tensor out = eval_seasonal(w, grid); double v : out.data()) EXPECT_EQ(v, 0.0);
  auto dst = w.block(*layout.seasonal_index()).mutable_data();
  dst[0] = 2.5;  // i = 0 cosine
  for (const Tensor out = eval_seasonal(w, grid); double v : out.data()) EXPECT_EQ(v, 2.5);
}

TEST(Seasonal, FirstHarmonicAtQuarter) {
  InrLayout layout(small_config());
  const std::size_t F = layout.frequencies();
  auto grid = TimestampGrid::from_values({0.25});
  auto w = InrWeights::zeros(layout);
  w.block(*layout.seasonal_index()).mutable_data()[1] = 1.0;  // cos(2 pi t)
  EXPECT_NEAR(eval_seasonal(w, grid).item(), 0.0, 1e-15);
  w = InrWeights::zeros(layout);
  w.block(*layout.seasonal_index()).mutable_data()[F + 1] = 1.0;  // sin(2 pi t)
  EXPECT_NEAR(eval_seasonal(w, grid).item(), 1.0, 1e-15);
}

TEST(Seasonal, MatchesDirectTrigonometry) {
  InrLayout layout(small_config(2));
  auto w = InrWeights::random(layout, 3, 1.0);
  auto grid = TimestampGrid::window(8);
  Tensor y = eval_seasonal(w, grid);
  const Tensor& s = *w.seasonal();
  const std::size_t F = layout.frequencies();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t j = 0; j < 8; ++j) {
      const double t = grid.values()[j];
      double acc = 0;
      for (std::size_t i = 0; i < F; ++i)
        acc += s.at(i, c) * std::cos(2 * std::numbers::pi * i * t) + s.at(i + F, c) * std::sin(2 * std::numbers::pi * i * t);
      EXPECT_NEAR(y.at(c, j), acc, 1e-13);
    }
}

TEST(Seasonal, PeriodicInUnitShift) {
  InrLayout layout(small_config());
  auto w = InrWeights::random(layout, 4, 1.0);
  std::vector<double> t{0.0, 0.125, 0.3, 0.61}, shifted;
  for (double v : t) shifted.push_back(v + 1.0);
  Tensor a = eval_seasonal(w, TimestampGrid::from_values(t));
  Tensor b = eval_seasonal(w, TimestampGrid::from_values(shifted));
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(a.at(j), b.at(j), 1e-12);
}

TEST(Residual, ZeroWeightsGiveZero) {
  InrLayout layout(small_config(3, 2));
  Tensor y = eval_residual(InrWeights::zeros(layout), TimestampGrid::window(8));
  EXPECT_EQ(y.shape(), (Shape{3, 8}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Residual, TwoGroupsHandPropagated) {
  InrConfig c;
  c.channels = 2;
  c.window = 4;
  c.global_layers = 1;
  c.group_layers = 1;
  c.groups = 2;
  c.global_width = 1;
  c.group_width = 1;
  c.trend = c.seasonal = false;
  InrLayout layout(c);
  auto w = InrWeights::zeros(layout);
  set(w, layout.input_proj_index(), {2.0});
  set(w, layout.global_weight_index(0), {1.0});
  set(w, layout.global_bias_index(0), {-0.5});
  set(w, layout.group_weight_index(0, 0), {3.0});
  set(w, layout.group_bias_index(0, 0), {0.25});
  set(w, layout.group_weight_index(1, 0), {-1.0});
  set(w, layout.group_bias_index(1, 0), {-2.0});
  Tensor y = eval_residual(w, TimestampGrid::window(4));
  for (std::size_t j = 0; j < 4; ++j) {
    const double t = j / 4.0;
    const double q = std::max(0.0, 2.0 * t * 1.0 - 0.5);
    EXPECT_DOUBLE_EQ(y.at(0, j), 3.0 * q + 0.25);
    EXPECT_DOUBLE_EQ(y.at(1, j), -1.0 * q - 2.0);  // negative: last layer has no ReLU
  }
}

TEST(Residual, SingleGroupIsPlainMlp) {
  InrLayout layout(small_config(3, 1));
  auto w = InrWeights::random(layout, 5, 0.8);
  auto grid = TimestampGrid::window(8);
  Tensor h = matmul(grid.column(), w.input_proj());
  for (std::size_t m = 0; m < 2; ++m) h = relu(add(matmul(h, w.global_weight(m)), w.global_bias(m)));
  h = relu(add(matmul(h, w.group_weight(0, 0)), w.group_bias(0, 0)));
  h = add(matmul(h, w.group_weight(0, 1)), w.group_bias(0, 1));
  EXPECT_TRUE(bitwise_equal(eval_residual(w, grid), transpose(h)));
}

TEST(Residual, GroupPerturbationOnlyMovesOwnedChannels) {
  InrLayout layout(small_config(5, 2));  // groups own channels {0,1,2} and {3,4}
  auto w = InrWeights::random(layout, 6, 0.8);
  auto grid = TimestampGrid::window(8);
  Tensor before = eval_residual(w, grid).clone();
  for (double& v : w.block(layout.group_bias_index(1, 1)).mutable_data()) v += 0.5;
  for (double& v : w.block(layout.group_weight_index(1, 0)).mutable_data()) v *= 1.5;
  Tensor after = eval_residual(w, grid);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t j = 0; j < 8; ++j) {
      if (c < 3)
        EXPECT_EQ(before.at(c, j), after.at(c, j));
      else
        EXPECT_NE(before.at(c, j), after.at(c, j));
    }
}

TEST(Inr, ZeroAndAdditiveConstants) {
  InrLayout layout(small_config());
  auto w = InrWeights::zeros(layout);
  auto grid = TimestampGrid::window(8);
  for (const Tensor out = eval_inr(w, grid); double v : out.data()) EXPECT_EQ(v, 0.0);
  set(w, *layout.trend_index(), {1, 0, 0});
  w.block(*layout.seasonal_index()).mutable_data()[0] = 2.0;
  for (const Tensor out = eval_inr(w, grid); double v : out.data()) EXPECT_EQ(v, 3.0);
}

TEST(Inr, EqualsComponentSumExactly) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    InrLayout layout(small_config(1 + seed % 4, 1 + seed % 3));
    auto w = InrWeights::random(layout, seed, 0.5);
    auto grid = TimestampGrid::window(8);
    Tensor expect = add(add(eval_trend(w, grid), eval_seasonal(w, grid)), eval_residual(w, grid));
    EXPECT_TRUE(bitwise_equal(eval_inr(w, grid), expect));
  }
}

TEST(Inr, GradientMatchesFiniteDifferences) {
  InrLayout layout(small_config(3, 2));
  auto w = InrWeights::random(layout, 9, 0.5);
  auto grid = TimestampGrid::window(8);
  std::vector<Tensor> blocks(w.blocks().begin(), w.blocks().end());
  auto res = test::gradient_check(blocks, [&](const std::vector<Tensor>& b) {
    return test::project(eval_inr(InrWeights(layout, b), grid), 11);
  });
  EXPECT_LT(res.rel_error, 1e-4);
  EXPECT_GT(res.analytic_norm, 0.0);
}

TEST(Ablate, AllTrueKeepsStructure) {
  InrLayout layout(small_config(4, 2));
  auto w = InrWeights::random(layout, 1, 0.5);
  auto a = ablate(w, {});
  EXPECT_TRUE(a.layout() == layout);
  EXPECT_EQ(a.flatten(), w.flatten());
}

TEST(Ablate, NoDecompositionLeavesResidual) {
  InrLayout layout(small_config(2, 2));
  auto w = InrWeights::random(layout, 2, 0.5);
  auto a = ablate(w, {false, false, true});
  auto grid = TimestampGrid::window(8);
  EXPECT_FALSE(a.layout().trend_index().has_value());
  Tensor f = eval_inr(a, grid), r = eval_residual(w, grid);
  for (std::size_t i = 0; i < f.numel(); ++i) EXPECT_EQ(f.data()[i], r.data()[i]);
  EXPECT_TRUE(bitwise_equal(eval_residual(a, grid), r));
}

TEST(Ablate, GroupCollapseMatchesSingleGroupWidths) {
  InrConfig c = small_config(6, 6);
  InrLayout layout(c);
  auto w = InrWeights::random(layout, 3, 0.5);
  auto a = ablate(w, {true, true, false});
  InrConfig one = c;
  one.groups = 1;
  one.group_width = 6 * c.group_width;
  InrLayout single(one);
  EXPECT_EQ(a.layout().groups().size(), 1u);
  EXPECT_TRUE(a.layout() == single);
  EXPECT_EQ(a.layout().parameter_count(), single.parameter_count());
  // Block-diagonal merge keeps the function.
  auto grid = TimestampGrid::window(8);
  Tensor x = eval_inr(w, grid), y = eval_inr(a, grid);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.data()[i], y.data()[i], 1e-12);
}
