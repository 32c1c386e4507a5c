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

#include "socprob/gradcheck.hpp"

#include <algorithm>
#include <utility>

#include "socprob/finite_diff.hpp"
#include "socprob/random.hpp"

namespace socprob::train
{

GradCheckReport gradient_check(const nn::StackParams & params, const TrainingPair & pair,
  std::size_t obs_len, double h)
{
  const SampleGradient analytic = sample_gradient(params, pair, obs_len);
  const auto names = nn::parameter_names(params);
  const auto grads = nn::parameter_list(analytic.grads);
  const auto values = nn::parameter_list(params);

  GradCheckReport report;
  for (std::size_t i = 0; i < values.size(); ++i) {
    nn::StackParams probe = params;
    Tensor * slot = nn::parameter_list(probe)[i];
    const ScalarFunction f = [&](const Tensor & x) {
      *slot = x;
      return sample_loss(probe, pair, obs_len);
    };
    const Tensor numeric = finite_diff_grad(f, *values[i], h);
    GradCheckEntry e{names[i], values[i]->size(), max_relative_error(*grads[i], numeric)};
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

GradCheckReport tiny_gradient_check(std::uint64_t seed)
{
  nn::StackConfig cfg;
  cfg.height = 6;
  cfg.width = 6;
  cfg.channels = {2};
  cfg.kernel = 3;
  Rng rng(seed);
  // Every tensor random, peepholes and biases included.
  nn::StackParams params = nn::StackParams::zeros(cfg);
  params.for_each([&](const std::string &, Tensor & t) {
    for (auto & v : t.data()) {
      v = uniform(rng, -0.5, 0.5);
    }
  });

  const pmap::GridSpec spec{cfg.width, cfg.height, {0.0, 0.0}, 1.0};
  TrainingPair pair;
  for (std::size_t t = 0; t < 3; ++t) {
    pmap::ProbMap in = pmap::ProbMap::zeros(spec);
    pmap::ProbMap target = pmap::ProbMap::zeros(spec);
    for (auto & v : in.grid.data()) {
      v = uniform01(rng);
    }
    for (auto & v : target.grid.data()) {
      v = uniform01(rng);
    }
    pair.inputs.push_back(std::move(in));
    pair.targets.push_back(std::move(target));
  }
  return gradient_check(params, pair, 1);
}

}  // namespace socprob::train
