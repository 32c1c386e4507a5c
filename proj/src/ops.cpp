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

#include "socprob/ops.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "socprob/error.hpp"

namespace socprob
{

namespace detail
{

namespace
{
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;
}  // namespace

void im2col(
  const double * input, std::size_t channels, std::size_t height, std::size_t width,
  std::size_t kernel, std::size_t pad, double * columns)
{
  const std::size_t out_h = height + 2 * pad - kernel + 1;
  const std::size_t out_w = width + 2 * pad - kernel + 1;
  const std::ptrdiff_t ipad = static_cast<std::ptrdiff_t>(pad);
  double * dst = columns;
  for (std::size_t c = 0; c < channels; ++c) {
    const double * plane = input + c * height * width;
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - ipad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
            std::memset(dst, 0, out_w * sizeof(double));
            dst += out_w;
            continue;
          }
          const double * row = plane + static_cast<std::size_t>(iy) * width;
          for (std::size_t ox = 0; ox < out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - ipad;
            *dst++ = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(width))
                       ? 0.0
                       : row[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

void col2im(
  const double * columns, std::size_t channels, std::size_t height, std::size_t width,
  std::size_t kernel, std::size_t pad, double * input)
{
  const std::size_t out_h = height + 2 * pad - kernel + 1;
  const std::size_t out_w = width + 2 * pad - kernel + 1;
  const std::ptrdiff_t ipad = static_cast<std::ptrdiff_t>(pad);
  const double * src = columns;
  for (std::size_t c = 0; c < channels; ++c) {
    double * plane = input + c * height * width;
    for (std::size_t ky = 0; ky < kernel; ++ky) {
      for (std::size_t kx = 0; kx < kernel; ++kx) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - ipad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) {
            src += out_w;
            continue;
          }
          double * row = plane + static_cast<std::size_t>(iy) * width;
          for (std::size_t ox = 0; ox < out_w; ++ox, ++src) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - ipad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(width)) {
              row[static_cast<std::size_t>(ix)] += *src;
            }
          }
        }
      }
    }
  }
}

void gemm(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate)
{
  ConstMap ma(a, m, k);
  ConstMap mb(b, k, n);
  MutMap mo(out, m, n);
  if (accumulate) {
    mo.noalias() += ma * mb;
  } else {
    mo.noalias() = ma * mb;
  }
}

void gemm_nt(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate)
{
  ConstMap ma(a, m, k);
  ConstMap mb(b, n, k);
  MutMap mo(out, m, n);
  if (accumulate) {
    mo.noalias() += ma * mb.transpose();
  } else {
    mo.noalias() = ma * mb.transpose();
  }
}

void gemm_tn(
  const double * a, const double * b, double * out, std::size_t m, std::size_t k, std::size_t n,
  bool accumulate)
{
  ConstMap ma(a, k, m);
  ConstMap mb(b, k, n);
  MutMap mo(out, m, n);
  if (accumulate) {
    mo.noalias() += ma.transpose() * mb;
  } else {
    mo.noalias() = ma.transpose() * mb;
  }
}

}  // namespace detail

namespace
{

struct ConvGeometry
{
  std::size_t channels, height, width, out_channels, kernel, out_h, out_w;
};

ConvGeometry check_conv(const Tensor & input, const Tensor & kernels, std::size_t pad)
{
  if (input.rank() != 3) {
    throw DimensionError("conv2d: input must be C x H x W, got " + shape_to_string(input.shape()));
  }
  if (kernels.rank() != 4 || kernels.dim(2) != kernels.dim(3)) {
    throw DimensionError(
      "conv2d: kernels must be O x C x K x K, got " + shape_to_string(kernels.shape()));
  }
  if (kernels.dim(1) != input.dim(0)) {
    throw DimensionError(
      "conv2d: kernel channels " + std::to_string(kernels.dim(1)) + " != input channels " +
      std::to_string(input.dim(0)));
  }
  const std::size_t k = kernels.dim(2);
  if (k % 2 == 0) {
    throw DimensionError("conv2d: kernel size must be odd");
  }
  if (input.dim(1) + 2 * pad < k || input.dim(2) + 2 * pad < k) {
    throw DimensionError("conv2d: kernel larger than padded input");
  }
  return {
    input.dim(0), input.dim(1), input.dim(2), kernels.dim(0), k,
    input.dim(1) + 2 * pad - k + 1, input.dim(2) + 2 * pad - k + 1};
}

}  // namespace

Tensor conv2d(const Tensor & input, const Tensor & kernels, const Tensor & bias, std::size_t pad)
{
  const ConvGeometry g = check_conv(input, kernels, pad);
  if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
    throw DimensionError("conv2d: bias must have one value per output channel");
  }
  const std::size_t rows = g.channels * g.kernel * g.kernel;
  const std::size_t cols = g.out_h * g.out_w;
  std::vector<double> columns(rows * cols);
  detail::im2col(input.raw(), g.channels, g.height, g.width, g.kernel, pad, columns.data());

  Tensor out({g.out_channels, g.out_h, g.out_w});
  detail::gemm(kernels.raw(), columns.data(), out.raw(), g.out_channels, rows, cols, false);
  if (!bias.empty()) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      double * plane = out.raw() + o * cols;
      for (std::size_t i = 0; i < cols; ++i) {
        plane[i] += bias[o];
      }
    }
  }
  return out;
}

Conv2dGrads conv2d_backward(
  const Tensor & input, const Tensor & kernels, std::size_t pad, const Tensor & grad_output)
{
  const ConvGeometry g = check_conv(input, kernels, pad);
  if (grad_output.shape() != Shape{g.out_channels, g.out_h, g.out_w}) {
    throw DimensionError(
      "conv2d_backward: grad_output shape " + shape_to_string(grad_output.shape()));
  }
  const std::size_t rows = g.channels * g.kernel * g.kernel;
  const std::size_t cols = g.out_h * g.out_w;
  std::vector<double> columns(rows * cols);
  detail::im2col(input.raw(), g.channels, g.height, g.width, g.kernel, pad, columns.data());

  Conv2dGrads grads{Tensor::zeros_like(input), Tensor::zeros_like(kernels), Tensor({g.out_channels})};
  detail::gemm_nt(
    grad_output.raw(), columns.data(), grads.kernels.raw(), g.out_channels, cols, rows, false);
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    const double * plane = grad_output.raw() + o * cols;
    double s = 0.0;
    for (std::size_t i = 0; i < cols; ++i) {
      s += plane[i];
    }
    grads.bias[o] = s;
  }
  detail::gemm_tn(
    kernels.raw(), grad_output.raw(), columns.data(), rows, g.out_channels, cols, false);
  detail::col2im(columns.data(), g.channels, g.height, g.width, g.kernel, pad, grads.input.raw());
  return grads;
}

double sigmoid(double x)
{
  // Split on sign so exp never overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor & x)
{
  Tensor out = x;
  for (auto & v : out.data()) {
    v = sigmoid(v);
  }
  return out;
}

Tensor tanh(const Tensor & x)
{
  Tensor out = x;
  for (auto & v : out.data()) {
    v = std::tanh(v);
  }
  return out;
}

Tensor hadamard(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= b[i];
  }
  return out;
}

}  // namespace socprob
