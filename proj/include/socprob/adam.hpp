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

#ifndef SOCPROB__ADAM_HPP_
#define SOCPROB__ADAM_HPP_

#include <cstdint>
#include <string_view>
#include <utility>

#include "socprob/tensor.hpp"

namespace socprob
{

struct AdamConfig
{
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState
{
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step_count = 0;

  static AdamState for_param(const Tensor & param)
  {
    return {Tensor::zeros_like(param), Tensor::zeros_like(param), 0};
  }

  friend bool operator==(const AdamState &, const AdamState &) = default;
};

/**
 * @brief Bias-corrected Adam update, in place.
 *
 * m <- b1 m + (1 - b1) g, v <- b2 v + (1 - b2) g^2,
 * p <- p - lr * m_hat / (sqrt(v_hat) + eps).
 * Throws NumericError naming `name` if the gradient holds NaN/Inf.
 */
void adam_update(
  Tensor & param, const Tensor & grad, AdamState & state, const AdamConfig & cfg,
  std::string_view name = "param");

/// Value form of adam_update.
std::pair<Tensor, AdamState> adam_step(
  const Tensor & param, const Tensor & grad, const AdamState & state, const AdamConfig & cfg,
  std::string_view name = "param");

}  // namespace socprob

#endif  // SOCPROB__ADAM_HPP_
