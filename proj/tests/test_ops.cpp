// Copyright 2026 The socprob Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "socprob/error.hpp"
#include "socprob/finite_diff.hpp"
#include "socprob/ops.hpp"

namespace socprob
{
namespace
{

TEST(Conv2d, IdentityKernel)
{
  Rng rng(1);
  const Tensor x = oracle::random_tensor({1, 5, 4}, rng);
  const Tensor k({1, 1, 1, 1}, 1.0);
  EXPECT_EQ(conv2d(x, k, Tensor({1}), 0), x);
}

TEST(Conv2d, ZeroKernelGivesBias)
{
  Rng rng(2);
  const Tensor x = oracle::random_tensor({2, 4, 4}, rng);
  const Tensor k({3, 2, 3, 3});
  const Tensor b({3}, std::vector<double>{0.5, -1.0, 2.0});
  const Tensor y = conv2d(x, k, b, 1);
  ASSERT_EQ(y.shape(), (Shape{3, 4, 4}));
  for (std::size_t o = 0; o < 3; ++o) {
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t q = 0; q < 4; ++q) {
        EXPECT_EQ(y.at(o, r, q), b[o]);
      }
    }
  }
}

TEST(Conv2d, HandSumOfOnesKernel)
{
  const Tensor x({1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const Tensor k({1, 1, 3, 3}, 1.0);
  const Tensor y = conv2d(x, k, Tensor(), 1);
  EXPECT_DOUBLE_EQ(y.at(0, 1, 1), 45.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0), 1 + 2 + 4 + 5);
}

TEST(Conv2d, IsCrossCorrelationNotConvolution)
{
  // A kernel with a single 1 at (0, 0) reads the up-left neighbor.
  const Tensor x({1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k({1, 1, 3, 3});
  k[0] = 1.0;
  EXPECT_DOUBLE_EQ(conv2d(x, k, Tensor(), 1).at(0, 1, 1), 1.0);
}

TEST(Conv2d, OutputSizeFormula)
{
  const Tensor x({2, 7, 6});
  EXPECT_EQ(conv2d(x, Tensor({4, 2, 3, 3}), Tensor(), 0).shape(), (Shape{4, 5, 4}));
  EXPECT_EQ(conv2d(x, Tensor({4, 2, 5, 5}), Tensor(), 2).shape(), (Shape{4, 7, 6}));
}

TEST(Conv2d, ChannelMismatchIsDimensionError)
{
  EXPECT_THROW(conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), Tensor(), 1), DimensionError);
}

TEST(Conv2d, EvenKernelRejected)
{
  EXPECT_THROW(conv2d(Tensor({1, 4, 4}), Tensor({1, 1, 2, 2}), Tensor(), 0), DimensionError);
}

TEST(Conv2d, MatchesDirectLoopOracle)
{
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t C = 1 + uniform_index(rng, 3);
    const std::size_t O = 1 + uniform_index(rng, 3);
    const std::size_t K = uniform_index(rng, 2) == 0 ? 3 : 5;
    const std::size_t pad = uniform_index(rng, (K - 1) / 2 + 1);
    const std::size_t H = K + uniform_index(rng, 5);
    const std::size_t W = K + uniform_index(rng, 5);
    const Tensor x = oracle::random_tensor({C, H, W}, rng);
    const Tensor k = oracle::random_tensor({O, C, K, K}, rng);
    const Tensor b = oracle::random_tensor({O}, rng);
    const Tensor got = conv2d(x, k, b, pad);
    const Tensor want = oracle::conv2d(x, k, b, pad);
    ASSERT_EQ(got.shape(), want.shape());
    EXPECT_LT(max_abs(sub(got, want)), 1e-12);
  }
}

TEST(Conv2dProperty, Linearity)
{
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = oracle::random_tensor({2, 6, 5}, rng);
    const Tensor y = oracle::random_tensor({2, 6, 5}, rng);
    const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
    const double a = uniform(rng, -2, 2);
    const double b = uniform(rng, -2, 2);
    const Tensor lhs = conv2d(add(scale(x, a), scale(y, b)), k, Tensor(), 1);
    const Tensor rhs =
      add(scale(conv2d(x, k, Tensor(), 1), a), scale(conv2d(y, k, Tensor(), 1), b));
    EXPECT_LT(max_abs(sub(lhs, rhs)), 1e-12);
  }
}

TEST(Conv2dBackward, MatchesFiniteDifferences)
{
  Rng rng(7);
  const Tensor x = oracle::random_tensor({2, 5, 4}, rng);
  const Tensor k = oracle::random_tensor({3, 2, 3, 3}, rng);
  const Tensor b = oracle::random_tensor({3}, rng);
  const Tensor g = oracle::random_tensor({3, 5, 4}, rng);
  const Conv2dGrads grads = conv2d_backward(x, k, 1, g);

  const auto fx = [&](const Tensor & v) { return dot(conv2d(v, k, b, 1), g); };
  const auto fk = [&](const Tensor & v) { return dot(conv2d(x, v, b, 1), g); };
  const auto fb = [&](const Tensor & v) { return dot(conv2d(x, k, v, 1), g); };
  EXPECT_LT(max_relative_error(grads.input, finite_diff_grad(fx, x)), 1e-6);
  EXPECT_LT(max_relative_error(grads.kernels, finite_diff_grad(fk, k)), 1e-6);
  EXPECT_LT(max_relative_error(grads.bias, finite_diff_grad(fb, b)), 1e-6);
}

TEST(Activations, ZeroAndClosedForm)
{
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(sigmoid(1.0), 0.7310586, 1e-7);
  const Tensor z({3});
  EXPECT_EQ(tanh(z), z);
  EXPECT_EQ(sigmoid(z), Tensor({3}, 0.5));
}

TEST(Activations, SigmoidStableAtExtremes)
{
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_TRUE(std::isfinite(sigmoid(-745.0)));
}

TEST(ActivationsProperty, SigmoidSymmetryAndRanges)
{
  Rng rng(8);
  const Tensor x = oracle::random_tensor({1000}, rng, -30.0, 30.0);
  const Tensor s = sigmoid(x);
  const Tensor sn = sigmoid(scale(x, -1.0));
  const Tensor t = tanh(scale(x, 0.1));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(s[i] + sn[i], 1.0, 1e-12);
    EXPECT_GT(t[i], -1.0);
    EXPECT_LT(t[i], 1.0);
  }
  const Tensor small = sigmoid(oracle::random_tensor({1000}, rng, -10.0, 10.0));
  for (double v : small.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Hadamard, IdentityAndMismatch)
{
  Rng rng(9);
  const Tensor a = oracle::random_tensor({2, 3}, rng);
  EXPECT_EQ(hadamard(a, Tensor({2, 3}, 1.0)), a);
  EXPECT_THROW(hadamard(a, Tensor({3, 2}, 1.0)), DimensionError);
}

TEST(CompositeGradient, SigmoidTanhHadamardChain)
{
  // f(x) = sum(sigmoid(x) o tanh(conv(x)))
  Rng rng(10);
  const Tensor x = oracle::random_tensor({1, 4, 4}, rng);
  const Tensor k = oracle::random_tensor({1, 1, 3, 3}, rng);
  const auto f = [&](const Tensor & v) {
    return sum(hadamard(sigmoid(v), tanh(conv2d(v, k, Tensor(), 1))));
  };
  // Analytic: s' t + conv^T(s (1 - t^2))
  const Tensor s = sigmoid(x);
  const Tensor t = tanh(conv2d(x, k, Tensor(), 1));
  Tensor direct(x.shape());
  Tensor upstream(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    direct[i] = s[i] * (1.0 - s[i]) * t[i];
    upstream[i] = s[i] * (1.0 - t[i] * t[i]);
  }
  const Tensor analytic = add(direct, conv2d_backward(x, k, 1, upstream).input);
  EXPECT_LT(max_relative_error(analytic, finite_diff_grad(f, x)), 1e-4);
}

}  // namespace
}  // namespace socprob
