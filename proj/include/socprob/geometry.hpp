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

#ifndef SOCPROB__GEOMETRY_HPP_
#define SOCPROB__GEOMETRY_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

namespace socprob
{

using PedestrianId = std::int64_t;

/// Position in world meters.
struct WorldPoint
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const WorldPoint &, const WorldPoint &) = default;
};

inline double distance(const WorldPoint & a, const WorldPoint & b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

using Path = std::vector<WorldPoint>;

}  // namespace socprob

#endif  // SOCPROB__GEOMETRY_HPP_
