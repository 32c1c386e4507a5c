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

#ifndef SOCPROB__PROB_MAP_HPP_
#define SOCPROB__PROB_MAP_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "socprob/geometry.hpp"
#include "socprob/random.hpp"
#include "socprob/tensor.hpp"
#include "socprob/trajectory_data.hpp"

namespace socprob::pmap
{

struct CellIndex
{
  std::int64_t row = 0;  // grows with world y
  std::int64_t col = 0;  // grows with world x

  friend bool operator==(const CellIndex &, const CellIndex &) = default;
};

/**
 * @brief Axis-aligned square-cell grid over the walkable area.
 *
 * Cell (row, col) covers [origin.x + col*cell, origin.x + (col+1)*cell) in x
 * and the same in y with `row`. `origin` is the bottom-left corner.
 */
struct GridSpec
{
  std::size_t width = 100;
  std::size_t height = 100;
  WorldPoint origin;
  double cell_size = 1.0;

  WorldPoint cell_center(std::size_t row, std::size_t col) const
  {
    return {
      origin.x + (static_cast<double>(col) + 0.5) * cell_size,
      origin.y + (static_cast<double>(row) + 0.5) * cell_size};
  }
  CellIndex world_to_grid(const WorldPoint & p) const;
  bool contains(const CellIndex & c) const
  {
    return c.row >= 0 && c.col >= 0 && c.row < static_cast<std::int64_t>(height) &&
           c.col < static_cast<std::int64_t>(width);
  }
  WorldPoint max_corner() const
  {
    return {
      origin.x + static_cast<double>(width) * cell_size,
      origin.y + static_cast<double>(height) * cell_size};
  }
  std::size_t num_cells() const { return width * height; }

  friend bool operator==(const GridSpec &, const GridSpec &) = default;
};

/// Bounding box of all points, grown by margin_frac per side, centered in a
/// grid of square cells. All-identical points fall back to a 1 m extent.
GridSpec fit_grid(std::span<const WorldPoint> points, std::size_t width, std::size_t height,
  double margin_frac = 0.05);
GridSpec fit_grid(const data::Scene & scene, std::size_t width, std::size_t height,
  double margin_frac = 0.05);

struct GaussianParams
{
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 0.3;
  double sigma2 = 0.3;
  double rho = 0.0;

  static GaussianParams isotropic(const WorldPoint & center, double sigma)
  {
    return {center.x, center.y, sigma, sigma, 0.0};
  }
  /// Throws ArgumentError unless sigmas > 0 and |rho| < 1.
  void validate() const;
};

/// Bivariate normal density divided by its peak value, so f(mu) = 1.
double peak_normalized_density(const GaussianParams & g, const WorldPoint & p);

/// Single-channel density grid, values in [0, 1].
struct ProbMap
{
  Tensor grid;  // 1 x height x width
  GridSpec spec;

  static ProbMap zeros(const GridSpec & spec);

  double value(std::size_t row, std::size_t col) const { return grid[row * spec.width + col]; }
  double & value(std::size_t row, std::size_t col) { return grid[row * spec.width + col]; }

  friend bool operator==(const ProbMap &, const ProbMap &) = default;
};

/// Peak-normalized bivariate Gaussian evaluated at every cell center.
ProbMap gaussian_map(const GaussianParams & params, const GridSpec & spec);

/// Cellwise maximum; an empty list yields the all-zero map on `spec`.
ProbMap compose_max(std::span<const ProbMap> maps, const GridSpec & spec);
ProbMap compose_max(std::span<const ProbMap> maps);

struct EncodeOptions
{
  double sigma_target = 0.1;
  double sigma_other = 0.3;
  bool integrate_neighbors = true;
};

/**
 * @brief One time step of the input representation.
 *
 * Every pedestrian becomes an isotropic Gaussian (target with sigma_target,
 * everybody else with sigma_other) and the maps are merged by cellwise max.
 * With integrate_neighbors off only the target is drawn.
 */
ProbMap encode_frame(const std::map<PedestrianId, WorldPoint> & positions,
  PedestrianId target_id, const GridSpec & spec, const EncodeOptions & options = {});

/// Draws a cell proportionally to its (clamped) value, then a uniform point
/// inside it. DecodeError if no cell is positive.
WorldPoint sample_coordinate(const ProbMap & map, Rng & rng);

/// sample_coordinate for repeated draws from one map; same draws, same results.
class MapSampler
{
public:
  /// DecodeError if no cell is positive.
  explicit MapSampler(const ProbMap & map);
  WorldPoint draw(Rng & rng) const;

private:
  GridSpec spec_;
  std::vector<double> cumulative_;
  std::size_t last_positive_ = 0;
};

/// Center of the largest cell; ties go to the lowest (row, col).
WorldPoint argmax_decode(const ProbMap & map);
CellIndex argmax_cell(const ProbMap & map);

// Figure export. Both write the top row as the largest world y.
void write_pgm(const ProbMap & map, std::ostream & out);
void write_csv(const ProbMap & map, std::ostream & out);

}  // namespace socprob::pmap

#endif  // SOCPROB__PROB_MAP_HPP_
