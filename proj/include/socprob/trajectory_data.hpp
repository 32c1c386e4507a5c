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

#ifndef SOCPROB__TRAJECTORY_DATA_HPP_
#define SOCPROB__TRAJECTORY_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "socprob/geometry.hpp"

namespace socprob::data
{

/// Names of the five benchmark scenes, in table order.
inline const std::vector<std::string> & benchmark_scene_names()
{
  static const std::vector<std::string> names{"eth", "hotel", "univ", "zara1", "zara2"};
  return names;
}

struct TrackPoint
{
  std::int64_t frame = 0;  // time-step index, not the raw annotation frame id
  double x = 0.0;
  double y = 0.0;

  WorldPoint position() const { return {x, y}; }
  friend bool operator==(const TrackPoint &, const TrackPoint &) = default;
};

/// One pedestrian's annotations ordered by strictly increasing frame index.
/// Frame gaps split the track into contiguous runs; samples never span a gap.
struct Trajectory
{
  PedestrianId pedestrian_id = 0;
  std::vector<TrackPoint> points;

  friend bool operator==(const Trajectory &, const Trajectory &) = default;
};

struct Scene
{
  std::string name;
  std::vector<Trajectory> trajectories;  // sorted by pedestrian_id
  double frame_interval_s = 0.4;
  // raw frame id = frame_origin + index * frame_stride
  std::int64_t frame_origin = 0;
  std::int64_t frame_stride = 1;

  bool empty() const { return trajectories.empty(); }
  std::size_t num_points() const;
  friend bool operator==(const Scene &, const Scene &) = default;
};

/// Per-step positions of a pedestrian inside a window; nullopt when absent.
using MaskedPath = std::vector<std::optional<WorldPoint>>;

struct PredictionSample
{
  PedestrianId target_id = 0;
  Path observed;
  Path future;
  std::map<PedestrianId, MaskedPath> neighbor_observed;
  std::map<PedestrianId, MaskedPath> neighbor_future;
  std::int64_t anchor_frame = 0;  // frame index of observed[0]

  std::size_t obs_len() const { return observed.size(); }
  std::size_t pred_len() const { return future.size(); }
  std::size_t total_len() const { return observed.size() + future.size(); }

  /// Positions of every pedestrian present at window step t (0-based over obs+pred).
  std::map<PedestrianId, WorldPoint> positions_at(std::size_t t) const;
};

enum class DatasetFormat { tsv };

struct ParseOptions
{
  std::string name;
  /// Raw frame ids between consecutive time steps; 0 infers it as the most
  /// common gap between distinct frame ids (ties go to the smaller gap).
  std::int64_t annotation_stride = 0;
  double frame_interval_s = 0.4;
};

/**
 * @brief Reads `frame_id ped_id x y` rows (tab or space separated).
 *
 * Lines starting with '#' and blank lines are skipped. Integral ids written
 * as reals ("780.0") are accepted. Throws ParseError for malformed rows and
 * DataError for duplicate (frame, pedestrian) pairs or frame ids that do not
 * sit on the annotation stride.
 */
Scene parse_dataset(std::istream & source, const ParseOptions & options = {},
  DatasetFormat format = DatasetFormat::tsv);
Scene parse_dataset_file(const std::filesystem::path & path, ParseOptions options = {});

/// Writes the scene back in the canonical tab-separated format, 6 decimals.
void serialize_dataset(const Scene & scene, std::ostream & out);

/**
 * @brief Sliding (obs_len + pred_len) windows over every contiguous run.
 *
 * One sample per target per window start; windows advance by `stride` steps
 * within each run. Neighbors present for any part of the window are kept
 * with per-step presence.
 */
std::vector<PredictionSample> build_samples(
  const Scene & scene, std::size_t obs_len = 8, std::size_t pred_len = 12, std::size_t stride = 1);

struct Split
{
  std::vector<Scene> train;
  std::vector<Scene> test;
};

/// Held-out scene becomes the test split; every other scene goes to train.
Split leave_one_out(const std::vector<Scene> & scenes, std::string_view held_out);

/// Loads `<dir>/<name>.txt` (or `.tsv`) for each name. Missing file -> ConfigError.
std::vector<Scene> load_scenes(
  const std::filesystem::path & dir, const std::vector<std::string> & names);

/// Mirrors a sample's coordinates about `center` (x when horizontal, y when vertical).
PredictionSample flip_sample(
  const PredictionSample & sample, bool horizontal, bool vertical, const WorldPoint & center);

}  // namespace socprob::data

#endif  // SOCPROB__TRAJECTORY_DATA_HPP_
