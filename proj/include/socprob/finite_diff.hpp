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

#ifndef SOCPROB__FINITE_DIFF_HPP_
#define SOCPROB__FINITE_DIFF_HPP_

#include <functional>

#include "socprob/tensor.hpp"

namespace socprob
{

using ScalarFunction = std::function<double(const Tensor &)>;

/// Central-difference gradient of f at x. Throws NumericError if f is non-finite.
Tensor finite_diff_grad(const ScalarFunction & f, const Tensor & x, double h = 1e-4);

/**
 * @brief Relative error used by all gradient checks.
 *
 * |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
 * turning rounding noise into huge ratios.
 */
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Largest relative_error over all elements.
double max_relative_error(const Tensor & analytic, const Tensor & numeric, double floor = 1e-8);

}  // namespace socprob

#endif  // SOCPROB__FINITE_DIFF_HPP_
