// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hybridprune/adam.hpp"
#include "hybridprune/error.hpp"
#include "hybridprune/tape.hpp"
#include "test_support.hpp"

namespace hybridprune {
namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(TapeTest, MatmulByIdentity) {
  Tape t;
  const Var a = t.constant(mat({{1, 2}, {3, 4}}));
  const Var i = t.constant(Matrix(Matrix::Identity(2, 2)));
  EXPECT_EQ(t.value(t.matmul(a, i)), mat({{1, 2}, {3, 4}}));
  EXPECT_EQ(t.value(t.matmul(i, t.constant(mat({{5}, {7}})))), mat({{5}, {7}}));
}

TEST(TapeTest, MatmulShapeMismatchReportsBothShapes) {
  Tape t;
  const Var a = t.constant(Matrix::Zero(2, 3));
  const Var b = t.constant(Matrix::Zero(2, 3));
  try {
    t.matmul(a, b);
    FAIL() << "expected a shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
  }
}

TEST(TapeTest, MatmulGradientOfSumIsTransposeBroadcast) {
  std::mt19937_64 rng(5);
  Tensor a(testing::random_matrix(3, 4, rng));
  Tensor b(testing::random_matrix(4, 2, rng));
  Tape t;
  t.backward(t.sum(t.matmul(t.parameter(a), t.parameter(b))));
  const Matrix expected = Matrix::Ones(3, 2) * b.values().transpose();
  EXPECT_LT(testing::relative_error(a.grad(), expected), 1e-14);
}

TEST(TapeTest, ReluValuesAndGradient) {
  Tape t;
  Tensor x(mat({{-1, 0, 2}}));
  const Var y = t.activation(t.parameter(x), Activation::Relu);
  EXPECT_EQ(t.value(y), mat({{0, 0, 2}}));

  Tensor z(mat({{-1, 2}}));
  Tape t2;
  t2.backward(t2.sum(t2.activation(t2.parameter(z), Activation::Relu)));
  EXPECT_EQ(z.grad(), mat({{0, 1}}));
}

TEST(TapeTest, GeluIsZeroAtZeroAndMatchesFormula) {
  EXPECT_EQ(gelu(0.0), 0.0);
  for (double x : {-3.0, -0.5, 0.7, 2.5}) {
    const double expected = 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(gelu(x), expected, 1e-15);
    Tape t;
    Matrix m(1, 1);
    m(0, 0) = x;
    EXPECT_NEAR(t.value(t.activation(t.constant(m), Activation::Gelu))(0, 0), expected, 1e-14);
  }
}

TEST(TapeTest, CrossEntropyUniformLogitsIsLogC) {
  for (int c : {2, 3, 10}) {
    Tape t;
    const std::vector<int> labels{0, c - 1};
    const Var loss = t.softmax_cross_entropy(t.constant(Matrix::Zero(2, c)), labels);
    EXPECT_NEAR(t.value(loss)(0, 0), std::log(static_cast<double>(c)), 1e-14);
  }
}

TEST(TapeTest, CrossEntropyPeakedLogitsApproachZero) {
  Tape t;
  Matrix logits = Matrix::Zero(1, 4);
  logits(0, 2) = 60.0;
  const std::vector<int> labels{2};
  EXPECT_LT(t.value(t.softmax_cross_entropy(t.constant(logits), labels))(0, 0), 1e-20);
}

TEST(TapeTest, CrossEntropyRejectsOutOfRangeLabel) {
  Tape t;
  const std::vector<int> labels{3};
  EXPECT_THROW(t.softmax_cross_entropy(t.constant(Matrix::Zero(1, 3)), labels), Error);
}

TEST(TapeTest, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  std::mt19937_64 rng(9);
  Tensor logits(testing::random_matrix(4, 3, rng));
  const std::vector<int> labels{0, 2, 1, 2};
  Tape t;
  t.backward(t.softmax_cross_entropy(t.parameter(logits), labels));
  Matrix expected(4, 3);
  for (Index r = 0; r < 4; ++r) {
    double z = 0.0;
    for (Index c = 0; c < 3; ++c) z += std::exp(logits.values()(r, c));
    for (Index c = 0; c < 3; ++c) {
      expected(r, c) = (std::exp(logits.values()(r, c)) / z - (labels[static_cast<std::size_t>(r)] == c ? 1.0 : 0.0)) / 4.0;
    }
  }
  EXPECT_LT(testing::relative_error(logits.grad(), expected), 1e-12);
}

TEST(TapeTest, UnreachableParameterGetsZeroGradient) {
  Tensor used(Matrix::Ones(2, 2));
  Tensor unused(Matrix::Ones(2, 2));
  unused.grad().setConstant(7.0);
  Tape t;
  t.parameter(unused);
  t.backward(t.sum(t.parameter(used)));
  EXPECT_EQ(unused.grad(), Matrix::Zero(2, 2));
  EXPECT_EQ(used.grad(), Matrix::Ones(2, 2));
}

TEST(TapeTest, BackwardVisitsEachOperationOnce) {
  Tensor p(Matrix::Ones(2, 2));
  Tape t;
  const Var x = t.parameter(p);
  const Var y = t.add(x, x);
  const Var z = t.matmul(y, x);
  t.backward(t.sum(z));
  EXPECT_EQ(t.backward_visits(), 3u);
  // d/dp sum((2p) p) with p = ones(2): each entry 2*2 + 2*2 = 8
  EXPECT_EQ(p.grad(), Matrix::Constant(2, 2, 8.0));
}

TEST(TapeTest, ConstantsNeverReceiveGradients) {
  Tensor c(Matrix::Ones(2, 2));
  Tensor p(Matrix::Ones(2, 2));
  Tape t;
  t.backward(t.sum(t.matmul(t.parameter(p), t.constant(c))));
  EXPECT_EQ(c.grad(), Matrix::Zero(2, 2));
}

TEST(TapeTest, ForwardIsDeterministic) {
  std::mt19937_64 rng(3);
  const Matrix x = testing::random_matrix(8, 8, rng);
  auto run = [&]() {
    Tape t;
    const Var a = t.constant(x);
    return Matrix(t.value(t.layer_norm(t.self_attention(a, a, a, 4, 2))));
  };
  EXPECT_EQ(run(), run());
}

TEST(TapeTest, EveryPrimitiveMatchesFiniteDifferences) {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 3; ++trial) {
    for (const auto& r : testing::primitive_trials(rng)) {
      EXPECT_LE(r.max_relative_error, 1e-4) << r.name;
    }
  }
}

TEST(TapeTest, TwoLayerSupernetMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2; ++trial) {
    EXPECT_LE(testing::supernet_trial(rng).max_relative_error, 1e-4);
  }
}

TEST(AdamTest, ZeroGradientLeavesParametersUnchanged) {
  Tensor p(Matrix::Constant(2, 3, 0.5));
  AdamState state;
  std::vector<Tensor*> params{&p};
  adam_step(params, state, 0.1);
  EXPECT_EQ(p.values(), Matrix::Constant(2, 3, 0.5));
}

TEST(AdamTest, FirstStepMovesAgainstGradientSign) {
  Tensor p(Matrix::Zero(1, 3));
  p.grad() = mat({{2.0, -0.5, 1e-3}});
  AdamState state;
  std::vector<Tensor*> params{&p};
  adam_step(params, state, 0.01);
  // Bias-corrected first step has magnitude lr * |g| / (|g| + eps).
  EXPECT_NEAR(p.values()(0, 0), -0.01, 1e-9);
  EXPECT_NEAR(p.values()(0, 1), 0.01, 1e-9);
  EXPECT_LT(p.values()(0, 2), 0.0);
}

TEST(AdamTest, TwoStepsReduceQuadraticLoss) {
  Tensor p(mat({{3.0, -2.0}}));
  AdamState state;
  std::vector<Tensor*> params{&p};
  auto loss = [&]() { return p.values().squaredNorm(); };
  const double before = loss();
  for (int i = 0; i < 2; ++i) {
    p.grad() = 2.0 * p.values();
    adam_step(params, state, 0.1);
  }
  EXPECT_LT(loss(), before);
}

TEST(AdamTest, ForgetRestartsBiasCorrection) {
  Tensor p(Matrix::Zero(1, 1));
  AdamState state;
  std::vector<Tensor*> params{&p};
  p.grad()(0, 0) = 1.0;
  adam_step(params, state, 0.1);
  EXPECT_EQ(state.tracked(), 1u);
  state.forget(p);
  EXPECT_EQ(state.tracked(), 0u);
  const double before = p.values()(0, 0);
  adam_step(params, state, 0.1);
  EXPECT_NEAR(p.values()(0, 0) - before, -0.1, 1e-6);
}

}  // namespace
}  // namespace hybridprune
