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

#ifndef SOCPROB__TENSOR_HPP_
#define SOCPROB__TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace socprob
{

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape & shape);
std::string shape_to_string(const Shape & shape);

/**
 * @brief Dense row-major array of doubles.
 *
 * Rank is arbitrary; the network layers use rank 3 (C x H x W) for
 * activations and rank 4 (O x C x K x K) for convolution kernels.
 */
class Tensor
{
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor & other) { return Tensor(other.shape_); }

  const Shape & shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double * raw() { return data_.data(); }
  const double * raw() const { return data_.data(); }

  double & operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 accessors (channel, row, col).
  double & at(std::size_t c, std::size_t r, std::size_t q);
  double at(std::size_t c, std::size_t r, std::size_t q) const;

  void fill(double value);
  /// Reinterprets the shape; the element count must not change.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

  friend bool operator==(const Tensor & a, const Tensor & b) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws DimensionError naming `what` when the shapes differ.
void require_same_shape(const Tensor & a, const Tensor & b, const char * what);

// Elementwise arithmetic. Shapes must match exactly.
Tensor add(const Tensor & a, const Tensor & b);
Tensor sub(const Tensor & a, const Tensor & b);
Tensor scale(const Tensor & a, double s);
void axpy(double alpha, const Tensor & x, Tensor & y);

double sum(const Tensor & a);
double dot(const Tensor & a, const Tensor & b);
double squared_norm(const Tensor & a);
double max_abs(const Tensor & a);

}  // namespace socprob

#endif  // SOCPROB__TENSOR_HPP_
