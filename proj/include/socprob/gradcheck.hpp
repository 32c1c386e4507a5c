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

#ifndef SOCPROB__GRADCHECK_HPP_
#define SOCPROB__GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "socprob/convlstm.hpp"
#include "socprob/training.hpp"

namespace socprob::train
{

struct GradCheckEntry
{
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport
{
  std::vector<GradCheckEntry> entries;  // one per parameter tensor
  double max_rel_error = 0.0;

  bool passed(double tolerance = 1e-4) const { return max_rel_error < tolerance; }
};

/// Backprop gradients of the training loss against central differences.
GradCheckReport gradient_check(const nn::StackParams & params, const TrainingPair & pair,
  std::size_t obs_len, double h = 3e-4);

/// One layer, 2 hidden channels, 6x6 grid, 3 supervised steps, random weights.
GradCheckReport tiny_gradient_check(std::uint64_t seed = 1);

}  // namespace socprob::train

#endif  // SOCPROB__GRADCHECK_HPP_
