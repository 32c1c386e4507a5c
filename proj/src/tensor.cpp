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

#include "socprob/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "socprob/error.hpp"

namespace socprob
{

std::size_t shape_size(const Shape & shape)
{
  return std::accumulate(
    shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>());
}

std::string shape_to_string(const Shape & shape)
{
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out += "x";
    }
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
: shape_(std::move(shape)), data_(shape_size(shape_), fill)
{
}

Tensor::Tensor(Shape shape, std::vector<double> data)
: shape_(std::move(shape)), data_(std::move(data))
{
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError(
      "tensor shape " + shape_to_string(shape_) + " does not match " +
      std::to_string(data_.size()) + " values");
  }
}

double & Tensor::at(std::size_t c, std::size_t r, std::size_t q)
{
  return data_[(c * shape_[1] + r) * shape_[2] + q];
}

double Tensor::at(std::size_t c, std::size_t r, std::size_t q) const
{
  return data_[(c * shape_[1] + r) * shape_[2] + q];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const
{
  if (shape_size(shape) != data_.size()) {
    throw DimensionError(
      "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor & a, const Tensor & b, const char * what)
{
  if (a.shape() != b.shape()) {
    throw DimensionError(
      std::string(what) + ": shape " + shape_to_string(a.shape()) + " vs " +
      shape_to_string(b.shape()));
  }
}

Tensor add(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += b[i];
  }
  return out;
}

Tensor sub(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] -= b[i];
  }
  return out;
}

Tensor scale(const Tensor & a, double s)
{
  Tensor out = a;
  for (auto & v : out.data()) {
    v *= s;
  }
  return out;
}

void axpy(double alpha, const Tensor & x, Tensor & y)
{
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += alpha * x[i];
  }
}

double sum(const Tensor & a)
{
  return std::accumulate(a.data().begin(), a.data().end(), 0.0);
}

double dot(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "dot");
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

double squared_norm(const Tensor & a) { return dot(a, a); }

double max_abs(const Tensor & a)
{
  double m = 0.0;
  for (double v : a.data()) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace socprob
