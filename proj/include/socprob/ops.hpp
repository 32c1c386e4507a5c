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

#ifndef SOCPROB__OPS_HPP_
#define SOCPROB__OPS_HPP_

#include <cstddef>

#include "socprob/tensor.hpp"

namespace socprob
{

/**
 * @brief 2D cross-correlation (no kernel flip) with zero padding, stride 1.
 *
 * input C x H x W, kernels O x C x K x K, bias O (or empty for no bias).
 * Output is O x (H - K + 1 + 2 pad) x (W - K + 1 + 2 pad).
 */
Tensor conv2d(const Tensor & input, const Tensor & kernels, const Tensor & bias, std::size_t pad);

struct Conv2dGrads
{
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

/// Gradients of sum(grad_output * conv2d(input, kernels, bias, pad)).
Conv2dGrads conv2d_backward(
  const Tensor & input, const Tensor & kernels, std::size_t pad, const Tensor & grad_output);

Tensor sigmoid(const Tensor & x);
Tensor tanh(const Tensor & x);
Tensor hadamard(const Tensor & a, const Tensor & b);

double sigmoid(double x);

namespace detail
{

// Unfolds C x H x W into (C K K) x (Ho Wo) columns, row-major.
void im2col(
  const double * input, std::size_t channels, std::size_t height, std::size_t width,
  std::size_t kernel, std::size_t pad, double * columns);

// Adjoint of im2col; accumulates into `input` (which must be zeroed by the caller).
void col2im(
  const double * columns, std::size_t channels, std::size_t height, std::size_t width,
  std::size_t kernel, std::size_t pad, double * input);

// out(MxN) = a(MxK) * b(KxN) (+= when accumulate). All row-major.
void gemm(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate);
// out(MxN) = a(MxK) * b(NxK)^T (+= when accumulate).
void gemm_nt(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate);
// out(MxN) = a(KxM)^T * b(KxN) (+= when accumulate).
void gemm_tn(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate);

}  // namespace detail

}  // namespace socprob

#endif  // SOCPROB__OPS_HPP_
