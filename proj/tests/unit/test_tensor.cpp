#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support/test_support.hpp"
#include "tsinr/errors.hpp"
#include "tsinr/tensor.hpp"

using namespace tsinr;
using tsinr::test::gradient_check;
using tsinr::test::random_tensor;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Tensor, FromRejectsWrongLength) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::zeros({0, 3}), DimensionError);
}

TEST(Tensor, CopyAliasesCloneDoesNot) {
  Tensor a = Tensor::matrix({{1, 2}});
  Tensor b = a;
  Tensor c = a.clone();
  a.mutable_data()[0] = 9;
  EXPECT_EQ(b.at(0), 9);
  EXPECT_EQ(c.at(0), 1);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  std::mt19937_64 rng(1);
  Tensor eye = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  Tensor b = random_tensor(rng, {3, 5});
  EXPECT_TRUE(bitwise_equal(matmul(eye, b), b));
}

TEST(Matmul, SmallHandComputedProduct) {
  Tensor r = matmul(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::matrix({{5}, {6}}));
  EXPECT_EQ(r.shape(), (Shape{2, 1}));
  EXPECT_EQ(values(r), (std::vector<double>{17, 39}));
}

TEST(Matmul, ZeroAnnihilates) {
  std::mt19937_64 rng(2);
  Tensor r = matmul(Tensor::zeros({4, 3}), random_tensor(rng, {3, 2}));
  for (double v : r.data()) EXPECT_EQ(v, 0.0);
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(3);
  Tensor a = random_tensor(rng, {5, 7});
  Tensor b = random_tensor(rng, {7, 4});
  Tensor r = matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 7; ++k) acc += a.at(i, k) * b.at(k, j);
      EXPECT_NEAR(r.at(i, j), acc, 1e-14);
    }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 5}));
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(Elementwise, HandValues) {
  EXPECT_EQ(values(relu(Tensor::from({3}, {-1, 0, 2}))), (std::vector<double>{0, 0, 2}));
  EXPECT_EQ(cos(Tensor::from({1}, {0})).item(), 1.0);
  EXPECT_EQ(pow_scalar(Tensor::from({1}, {2}), 3).item(), 8.0);
  EXPECT_EQ(elementwise(Elementwise::square, Tensor::from({2}, {3, -4})).at(1), 16.0);
  EXPECT_EQ(elementwise(Elementwise::sub, Tensor::from({1}, {5}), Tensor::from({1}, {2})).item(), 3.0);
}

TEST(Elementwise, LeadingOneBroadcast) {
  Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  Tensor b = Tensor::matrix({{10, 20, 30}});
  EXPECT_EQ(values(add(a, b)), (std::vector<double>{11, 22, 33, 14, 25, 36}));
  EXPECT_THROW(add(a, Tensor::matrix({{1, 2}})), DimensionError);
}

TEST(Elementwise, BroadcastGradientMatchesExplicitTiling) {
  std::mt19937_64 rng(4);
  Tensor a = random_tensor(rng, {4, 3});
  Tensor b = random_tensor(rng, {1, 3});
  Tensor w = random_tensor(rng, {4, 3});
  b.set_requires_grad(true);
  {
    Tape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(mul(a, b), w)));
  }
  // Tiled oracle: d/db_j = sum_i a_ij w_ij.
  for (std::size_t j = 0; j < 3; ++j) {
    double acc = 0;
    for (std::size_t i = 0; i < 4; ++i) acc += a.at(i, j) * w.at(i, j);
    EXPECT_NEAR(b.grad()[j], acc, 1e-14);
  }
}

TEST(Softmax, UniformAndSingleton) {
  Tensor s = softmax_lastdim(Tensor::matrix({{0, 0, 0}}));
  for (double v : s.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
  EXPECT_EQ(softmax_lastdim(Tensor::from({1}, {-123.4})).item(), 1.0);
}

TEST(Softmax, MatchesLongDoubleReference) {
  Tensor s = softmax_lastdim(Tensor::matrix({{1, 2, 3}}));
  long double z = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.at(i), static_cast<double>(std::exp(static_cast<long double>(i + 1)) / z), 1e-15);
}

TEST(Softmax, RowsSumToOneForLargeInputs) {
  Tensor s = softmax_lastdim(Tensor::matrix({{1000, 1001, 999}, {-1000, 0, 5}}));
  for (std::size_t r = 0; r < 2; ++r) {
    double acc = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_TRUE(std::isfinite(s.at(r, c)));
      acc += s.at(r, c);
    }
    EXPECT_NEAR(acc, 1.0, 1e-15);
  }
}

TEST(Backward, QuadraticGradient) {
  Tensor w = Tensor::from({2}, {1, 2});
  w.set_requires_grad(true);
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum(mul(w, w)));
  }
  EXPECT_EQ(values(Tensor::from({2}, {w.grad()[0], w.grad()[1]})), (std::vector<double>{2, 4}));
  EXPECT_TRUE(tape.empty());
}

TEST(Backward, DeadReluBlocksGradient) {
  Tensor c = Tensor::scalar(3.0);
  c.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  tape.backward(sum(mul(relu(Tensor::scalar(-5.0)), c)));
  EXPECT_EQ(c.grad()[0], 0.0);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor w = Tensor::from({2}, {1, 2});
  w.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  Tensor y = mul(w, w);
  EXPECT_THROW(tape.backward(y), ContractError);
}

TEST(Backward, RejectsEmptyTape) {
  Tape tape;
  EXPECT_THROW(tape.backward(Tensor::scalar(1.0)), ContractError);
}

TEST(Backward, NoRecordingWithoutTapeOrGrad) {
  Tensor w = Tensor::from({2}, {1, 2});
  Tape tape;
  {
    TapeScope scope(tape);
    (void)mul(w, w);  // no input requires grad
  }
  EXPECT_TRUE(tape.empty());
  w.set_requires_grad(true);
  Tensor y = mul(w, w);  // no active tape
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, SharedInputAccumulates) {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  Tape tape;
  TapeScope scope(tape);
  // y = x*x + 2x, dy/dx = 2x + 2 = 8
  tape.backward(sum(add(mul(x, x), scale(x, 2.0))));
  EXPECT_DOUBLE_EQ(x.grad()[0], 8.0);
}

TEST(Reductions, SumAndMean) {
  Tensor t = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(sum(t).item(), 10.0);
  EXPECT_EQ(mean(t).item(), 2.5);
}

TEST(Reductions, ForwardIsBitwiseRepeatable) {
  std::mt19937_64 rng(5);
  Tensor a = random_tensor(rng, {37, 53});
  Tensor b = random_tensor(rng, {53, 11});
  EXPECT_TRUE(bitwise_equal(sum(matmul(a, b)), sum(matmul(a, b))));
  EXPECT_TRUE(bitwise_equal(softmax_lastdim(a), softmax_lastdim(a)));
}

TEST(Shape, SlicingAndConcat) {
  Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(values(transpose(t)), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  EXPECT_EQ(values(slice_cols(t, 1, 2)), (std::vector<double>{2, 3, 5, 6}));
  EXPECT_EQ(values(slice_rows(t, 1, 1)), (std::vector<double>{4, 5, 6}));
  std::vector<std::size_t> idx{1, 0, 1};
  EXPECT_EQ(values(gather_rows(t, idx)), (std::vector<double>{4, 5, 6, 1, 2, 3, 4, 5, 6}));
  std::vector<Tensor> parts{t, t};
  EXPECT_EQ(concat_rows(parts).shape(), (Shape{4, 3}));
  EXPECT_EQ(values(concat_cols(parts)), (std::vector<double>{1, 2, 3, 1, 2, 3, 4, 5, 6, 4, 5, 6}));
  EXPECT_THROW(slice_cols(t, 2, 2), DimensionError);
  EXPECT_THROW(reshape(t, {4}), DimensionError);
}

TEST(NormalizeLastdim, ZeroMeanUnitVariance) {
  Tensor y = normalize_lastdim(Tensor::matrix({{1, 2, 3, 4}}), 0.0);
  double m = 0, v = 0;
  for (double x : y.data()) m += x;
  for (double x : y.data()) v += x * x;
  EXPECT_NEAR(m / 4, 0.0, 1e-15);
  EXPECT_NEAR(v / 4, 1.0, 1e-14);
}

// Finite-difference agreement for each primitive on a few random instances.
class PrimitiveGradient : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(100 + GetParam());
  const std::size_t r = 1 + rng() % 5, c = 1 + rng() % 5, k = 1 + rng() % 5;
  using V = std::vector<Tensor>;
  auto check = [](const char* name, V in, std::function<Tensor(const V&)> f) {
    auto res = gradient_check(std::move(in), [&](const V& x) { return tsinr::test::project(f(x), 77); });
    EXPECT_LT(res.rel_error, 1e-4) << name;
  };
  check("matmul", {random_tensor(rng, {r, k}), random_tensor(rng, {k, c})}, [](const V& x) { return matmul(x[0], x[1]); });
  check("add", {random_tensor(rng, {r, c}), random_tensor(rng, {1, c})}, [](const V& x) { return add(x[0], x[1]); });
  check("sub", {random_tensor(rng, {r, c}), random_tensor(rng, {r, c})}, [](const V& x) { return sub(x[0], x[1]); });
  check("mul", {random_tensor(rng, {r, c}), random_tensor(rng, {r, 1})}, [](const V& x) { return mul(x[0], x[1]); });
  check("relu", {tsinr::test::random_away_from_zero(rng, {r, c})}, [](const V& x) { return relu(x[0]); });
  check("square", {random_tensor(rng, {r, c})}, [](const V& x) { return square(x[0]); });
  check("sin", {random_tensor(rng, {r, c})}, [](const V& x) { return sin(x[0]); });
  check("cos", {random_tensor(rng, {r, c})}, [](const V& x) { return cos(x[0]); });
  check("tanh", {random_tensor(rng, {r, c})}, [](const V& x) { return tanh(x[0]); });
  check("pow", {random_tensor(rng, {r, c}, 0.5, 2.0)}, [](const V& x) { return pow_scalar(x[0], 2.5); });
  check("softmax", {random_tensor(rng, {r, c})}, [](const V& x) { return softmax_lastdim(x[0]); });
  check("normalize", {random_tensor(rng, {r, c + 1})}, [](const V& x) { return normalize_lastdim(x[0], 1e-5); });
  check("transpose", {random_tensor(rng, {r, c})}, [](const V& x) { return transpose(x[0]); });
  check("mean", {random_tensor(rng, {r, c})}, [](const V& x) { return mean(x[0]); });
  check("concat", {random_tensor(rng, {r, c}), random_tensor(rng, {r, k})}, [](const V& x) {
    std::vector<Tensor> p{x[0], x[1]};
    return concat_cols(p);
  });
  check("slice", {random_tensor(rng, {r + 1, c + 1})}, [](const V& x) { return slice_rows(slice_cols(x[0], 1, 1), 1, 1); });
}

INSTANTIATE_TEST_SUITE_P(RandomInstances, PrimitiveGradient, ::testing::Range(0, 4));
