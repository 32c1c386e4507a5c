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

#include "synthetic.hpp"

#include <cmath>
#include <numbers>

#include "socprob/random.hpp"

namespace socprob::testing
{

data::Trajectory straight_walker(PedestrianId id, std::int64_t first_frame, std::size_t length,
  WorldPoint start, WorldPoint step)
{
  data::Trajectory t;
  t.pedestrian_id = id;
  for (std::size_t k = 0; k < length; ++k) {
    const double s = static_cast<double>(k);
    t.points.push_back(
      {first_frame + static_cast<std::int64_t>(k), start.x + s * step.x, start.y + s * step.y});
  }
  return t;
}

data::Scene synthetic_scene(const SyntheticOptions & o)
{
  Rng rng(o.seed);
  data::Scene scene;
  scene.name = o.name;
  const double dt = scene.frame_interval_s;
  for (std::size_t p = 0; p < o.pedestrians; ++p) {
    const std::size_t length =
      o.min_length + uniform_index(rng, o.max_length - o.min_length + 1);
    const auto start = static_cast<std::int64_t>(uniform_index(rng, o.max_start + 1));
    const double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double speed = o.speed_mps * uniform(rng, 0.7, 1.3);
    const double vx = std::cos(heading) * speed * dt;
    const double vy = std::sin(heading) * speed * dt;
    // Start so that the path's midpoint lands inside the rectangle.
    const double mid_x = uniform(rng, 0.2 * o.width_m, 0.8 * o.width_m);
    const double mid_y = uniform(rng, 0.2 * o.height_m, 0.8 * o.height_m);
    const double half = 0.5 * static_cast<double>(length - 1);
    data::Trajectory t;
    t.pedestrian_id = static_cast<PedestrianId>(p + 1);
    for (std::size_t k = 0; k < length; ++k) {
      const double s = static_cast<double>(k) - half;
      t.points.push_back({start + static_cast<std::int64_t>(k),
        mid_x + s * vx + uniform(rng, -o.noise_m, o.noise_m),
        mid_y + s * vy + uniform(rng, -o.noise_m, o.noise_m)});
    }
    scene.trajectories.push_back(std::move(t));
  }
  return scene;
}

}  // namespace socprob::testing
