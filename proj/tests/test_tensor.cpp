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
#include "socprob/tensor.hpp"

namespace socprob
{
namespace
{

TEST(Tensor, ShapeAndSize)
{
  const Tensor t({2, 3, 4}, 1.5);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.dim(1), 3u);
  EXPECT_DOUBLE_EQ(sum(t), 36.0);
  EXPECT_EQ(shape_to_string(t.shape()), "[2x3x4]");
}

TEST(Tensor, DataLengthMustMatchShape)
{
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_NO_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
}

TEST(Tensor, RowMajorAccess)
{
  Tensor t({2, 2, 3});
  t.at(1, 0, 2) = 7.0;
  EXPECT_EQ(t[1 * 6 + 0 * 3 + 2], 7.0);
}

TEST(Tensor, ReshapeKeepsData)
{
  const Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.shape(), (Shape{3, 2}));
  EXPECT_EQ(r[5], 6.0);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(Tensor, ElementwiseArithmetic)
{
  const Tensor a({3}, std::vector<double>{1, 2, 3});
  const Tensor b({3}, std::vector<double>{4, 5, 6});
  EXPECT_EQ(add(a, b), Tensor({3}, std::vector<double>{5, 7, 9}));
  EXPECT_EQ(sub(b, a), Tensor({3}, std::vector<double>{3, 3, 3}));
  EXPECT_EQ(scale(a, 2.0), Tensor({3}, std::vector<double>{2, 4, 6}));
  EXPECT_DOUBLE_EQ(dot(a, b), 32.0);
  EXPECT_DOUBLE_EQ(squared_norm(a), 14.0);
  EXPECT_DOUBLE_EQ(max_abs(scale(a, -1.0)), 3.0);
  Tensor y = b;
  axpy(2.0, a, y);
  EXPECT_EQ(y, Tensor({3}, std::vector<double>{6, 9, 12}));
}

TEST(Tensor, ShapeMismatchIsDimensionError)
{
  const Tensor a({3});
  const Tensor b({1, 3});
  EXPECT_THROW(add(a, b), DimensionError);
  EXPECT_THROW(dot(a, b), DimensionError);
  Tensor y({2});
  EXPECT_THROW(axpy(1.0, a, y), DimensionError);
}

TEST(Tensor, FiniteCheck)
{
  Tensor t({2}, 1.0);
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
  t[1] = INFINITY;
  EXPECT_FALSE(t.all_finite());
}

TEST(TensorProperty, AddIsCommutativeAndFinite)
{
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor a = oracle::random_tensor({4, 5}, rng);
    const Tensor b = oracle::random_tensor({4, 5}, rng);
    const Tensor s = add(a, b);
    EXPECT_EQ(s, add(b, a));
    EXPECT_TRUE(s.all_finite());
  }
}

}  // namespace
}  // namespace socprob
