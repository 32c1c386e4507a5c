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

#include "socprob/adam.hpp"

#include <cmath>
#include <string>

#include "socprob/error.hpp"

namespace socprob
{

void adam_update(
  Tensor & param, const Tensor & grad, AdamState & state, const AdamConfig & cfg,
  std::string_view name)
{
  require_same_shape(param, grad, "adam_update");
  require_same_shape(param, state.first_moment, "adam_update");
  require_same_shape(param, state.second_moment, "adam_update");
  if (!grad.all_finite()) {
    throw NumericError("non-finite gradient for parameter '" + std::string(name) + "'");
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto m = state.first_moment.data();
  auto v = state.second_moment.data();
  auto p = param.data();
  auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    // lr == 0 leaves parameters bit-identical.
    if (cfg.lr != 0.0) {
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

std::pair<Tensor, AdamState> adam_step(
  const Tensor & param, const Tensor & grad, const AdamState & state, const AdamConfig & cfg,
  std::string_view name)
{
  std::pair<Tensor, AdamState> out{param, state};
  adam_update(out.first, grad, out.second, cfg, name);
  return out;
}

}  // namespace socprob
