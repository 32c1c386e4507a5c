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

#include "socprob/prob_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "socprob/error.hpp"

namespace socprob::pmap
{

namespace
{

// exp(-x) is exactly 0.0 in double for x > ~745.2; past this many sigmas an
// axis-aligned Gaussian contributes nothing, so skipping those cells is exact.
constexpr double kZeroSigmas = 39.0;

// Subnormal tail values are flushed to zero.
double density_or_zero(const GaussianParams & g, const WorldPoint & p)
{
  const double v = peak_normalized_density(g, p);
  return v < std::numeric_limits<double>::min() ? 0.0 : v;
}

void require_same_spec(const GridSpec & a, const GridSpec & b, const char * what)
{
  if (!(a == b)) {
    throw DimensionError(std::string(what) + ": maps use different grid specs");
  }
}

// Draws a peak-normalized isotropic/axis-aligned Gaussian into `dst` by max,
// touching only the cells where it can be non-zero.
void max_into(ProbMap & dst, const GaussianParams & g)
{
  const GridSpec & spec = dst.spec;
  if (g.rho != 0.0) {
    for (std::size_t r = 0; r < spec.height; ++r) {
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double v = density_or_zero(g, spec.cell_center(r, c));
        dst.value(r, c) = std::max(dst.value(r, c), v);
      }
    }
    return;
  }
  auto range = [&](double mu, double sigma, std::size_t n, double origin) {
    const double lo = (mu - kZeroSigmas * sigma - origin) / spec.cell_size;
    const double hi = (mu + kZeroSigmas * sigma - origin) / spec.cell_size;
    const double clamped_lo = std::clamp(std::floor(lo), 0.0, static_cast<double>(n));
    const double clamped_hi = std::clamp(std::ceil(hi) + 1.0, 0.0, static_cast<double>(n));
    return std::pair<std::size_t, std::size_t>(
      static_cast<std::size_t>(clamped_lo), static_cast<std::size_t>(clamped_hi));
  };
  const auto [c0, c1] = range(g.mu1, g.sigma1, spec.width, spec.origin.x);
  const auto [r0, r1] = range(g.mu2, g.sigma2, spec.height, spec.origin.y);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      const double v = density_or_zero(g, spec.cell_center(r, c));
      dst.value(r, c) = std::max(dst.value(r, c), v);
    }
  }
}

}  // namespace

CellIndex GridSpec::world_to_grid(const WorldPoint & p) const
{
  return {
    static_cast<std::int64_t>(std::floor((p.y - origin.y) / cell_size)),
    static_cast<std::int64_t>(std::floor((p.x - origin.x) / cell_size))};
}

GridSpec fit_grid(
  std::span<const WorldPoint> points, std::size_t width, std::size_t height, double margin_frac)
{
  if (points.empty()) {
    throw ArgumentError("fit_grid: no points");
  }
  if (width == 0 || height == 0) {
    throw ArgumentError("fit_grid: grid dimensions must be positive");
  }
  if (margin_frac < 0.0) {
    throw ArgumentError("fit_grid: negative margin");
  }
  double min_x = points[0].x, max_x = points[0].x;
  double min_y = points[0].y, max_y = points[0].y;
  for (const auto & p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double span_x = (max_x - min_x) * (1.0 + 2.0 * margin_frac);
  const double span_y = (max_y - min_y) * (1.0 + 2.0 * margin_frac);
  double extent = std::max(span_x, span_y);
  if (!(extent > 0.0)) {
    extent = 1.0;
  }

  GridSpec spec;
  spec.width = width;
  spec.height = height;
  spec.cell_size = extent / static_cast<double>(std::max(width, height));
  const double cx = 0.5 * (min_x + max_x);
  const double cy = 0.5 * (min_y + max_y);
  spec.origin = {
    cx - 0.5 * static_cast<double>(width) * spec.cell_size,
    cy - 0.5 * static_cast<double>(height) * spec.cell_size};
  return spec;
}

GridSpec fit_grid(
  const data::Scene & scene, std::size_t width, std::size_t height, double margin_frac)
{
  std::vector<WorldPoint> points;
  points.reserve(scene.num_points());
  for (const auto & t : scene.trajectories) {
    for (const auto & p : t.points) {
      points.push_back(p.position());
    }
  }
  if (points.empty()) {
    throw ArgumentError("fit_grid: scene '" + scene.name + "' is empty");
  }
  return fit_grid(points, width, height, margin_frac);
}

void GaussianParams::validate() const
{
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
    throw ArgumentError("gaussian: sigmas must be positive");
  }
  if (!(std::abs(rho) < 1.0)) {
    throw ArgumentError("gaussian: |rho| must be < 1");
  }
  if (!std::isfinite(mu1) || !std::isfinite(mu2) || !std::isfinite(sigma1) ||
      !std::isfinite(sigma2)) {
    throw ArgumentError("gaussian: parameters must be finite");
  }
}

double peak_normalized_density(const GaussianParams & g, const WorldPoint & p)
{
  const double dx = (p.x - g.mu1) / g.sigma1;
  const double dy = (p.y - g.mu2) / g.sigma2;
  const double q = dx * dx - 2.0 * g.rho * dx * dy + dy * dy;
  return std::exp(-q / (2.0 * (1.0 - g.rho * g.rho)));
}

ProbMap ProbMap::zeros(const GridSpec & spec)
{
  return {Tensor({1, spec.height, spec.width}), spec};
}

ProbMap gaussian_map(const GaussianParams & params, const GridSpec & spec)
{
  params.validate();
  ProbMap map = ProbMap::zeros(spec);
  max_into(map, params);
  return map;
}

ProbMap compose_max(std::span<const ProbMap> maps, const GridSpec & spec)
{
  ProbMap out = ProbMap::zeros(spec);
  for (const auto & m : maps) {
    require_same_spec(m.spec, spec, "compose_max");
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
      out.grid[i] = std::max(out.grid[i], m.grid[i]);
    }
  }
  return out;
}

ProbMap compose_max(std::span<const ProbMap> maps)
{
  if (maps.empty()) {
    throw ArgumentError("compose_max: empty list needs an explicit grid spec");
  }
  return compose_max(maps, maps.front().spec);
}

ProbMap encode_frame(
  const std::map<PedestrianId, WorldPoint> & positions, PedestrianId target_id,
  const GridSpec & spec, const EncodeOptions & options)
{
  const auto target = positions.find(target_id);
  if (target == positions.end()) {
    throw ArgumentError("encode_frame: target " + std::to_string(target_id) + " not present");
  }
  const auto target_params = GaussianParams::isotropic(target->second, options.sigma_target);
  target_params.validate();
  ProbMap map = ProbMap::zeros(spec);
  max_into(map, target_params);
  if (options.integrate_neighbors) {
    for (const auto & [id, pos] : positions) {
      if (id == target_id) {
        continue;
      }
      const auto params = GaussianParams::isotropic(pos, options.sigma_other);
      params.validate();
      max_into(map, params);
    }
  }
  return map;
}

MapSampler::MapSampler(const ProbMap & map) : spec_(map.spec)
{
  const std::size_t n = map.grid.size();
  cumulative_.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = map.grid[i];
    if (v > 0.0) {
      total += v;
      last_positive_ = i;
    }
    cumulative_[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DecodeError("sample_coordinate: map has no positive mass");
  }
}

WorldPoint MapSampler::draw(Rng & rng) const
{
  const double u = uniform01(rng) * cumulative_.back();
  // First cell whose running sum exceeds u; only positive cells raise the sum.
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const std::size_t chosen =
    it == cumulative_.end() ? last_positive_ : static_cast<std::size_t>(it - cumulative_.begin());
  const std::size_t row = chosen / spec_.width;
  const std::size_t col = chosen % spec_.width;
  const WorldPoint center = spec_.cell_center(row, col);
  const double jx = uniform01(rng) - 0.5;
  const double jy = uniform01(rng) - 0.5;
  return {center.x + jx * spec_.cell_size, center.y + jy * spec_.cell_size};
}

WorldPoint sample_coordinate(const ProbMap & map, Rng & rng) { return MapSampler(map).draw(rng); }

CellIndex argmax_cell(const ProbMap & map)
{
  if (map.grid.empty()) {
    throw ArgumentError("argmax_decode: empty map");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.grid.size(); ++i) {
    if (map.grid[i] > map.grid[best]) {
      best = i;
    }
  }
  return {
    static_cast<std::int64_t>(best / map.spec.width),
    static_cast<std::int64_t>(best % map.spec.width)};
}

WorldPoint argmax_decode(const ProbMap & map)
{
  const CellIndex c = argmax_cell(map);
  return map.spec.cell_center(static_cast<std::size_t>(c.row), static_cast<std::size_t>(c.col));
}

void write_pgm(const ProbMap & map, std::ostream & out)
{
  out << "P2\n" << map.spec.width << " " << map.spec.height << "\n65535\n";
  for (std::size_t r = map.spec.height; r-- > 0;) {
    for (std::size_t c = 0; c < map.spec.width; ++c) {
      const double v = std::clamp(map.value(r, c), 0.0, 1.0);
      out << (c ? " " : "") << static_cast<long>(std::lround(65535.0 * v));
    }
    out << "\n";
  }
}

void write_csv(const ProbMap & map, std::ostream & out)
{
  char buf[64];
  for (std::size_t r = map.spec.height; r-- > 0;) {
    for (std::size_t c = 0; c < map.spec.width; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", map.value(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace socprob::pmap
