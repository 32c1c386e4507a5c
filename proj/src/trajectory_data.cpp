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

#include "socprob/trajectory_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "socprob/error.hpp"

namespace socprob::data
{

namespace
{

struct RawRow
{
  std::int64_t frame;
  PedestrianId ped;
  double x;
  double y;
  std::size_t line;
};

std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      ++i;
    }
    if (i > start) {
      fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

double parse_real(std::string_view field, std::size_t line, const char * what)
{
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_integral(std::string_view field, std::size_t line, const char * what)
{
  const double value = parse_real(field, line, what);
  if (value != std::floor(value) || std::abs(value) > 9.0e15) {
    throw ParseError(line, std::string(what) + " is not an integer: '" + std::string(field) + "'");
  }
  return static_cast<std::int64_t>(value);
}

std::int64_t infer_stride(const std::vector<RawRow> & rows)
{
  std::set<std::int64_t> frames;
  for (const auto & r : rows) {
    frames.insert(r.frame);
  }
  std::map<std::int64_t, std::size_t> gap_counts;
  for (auto it = frames.begin(); std::next(it) != frames.end(); ++it) {
    ++gap_counts[*std::next(it) - *it];
  }
  std::int64_t best = 1;
  std::size_t best_count = 0;
  for (const auto & [gap, count] : gap_counts) {
    if (count > best_count) {
      best = gap;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

std::size_t Scene::num_points() const
{
  std::size_t n = 0;
  for (const auto & t : trajectories) {
    n += t.points.size();
  }
  return n;
}

std::map<PedestrianId, WorldPoint> PredictionSample::positions_at(std::size_t t) const
{
  std::map<PedestrianId, WorldPoint> out;
  const bool in_obs = t < observed.size();
  out[target_id] = in_obs ? observed[t] : future.at(t - observed.size());
  const auto & neighbors = in_obs ? neighbor_observed : neighbor_future;
  const std::size_t local = in_obs ? t : t - observed.size();
  for (const auto & [id, path] : neighbors) {
    if (path.at(local)) {
      out[id] = *path[local];
    }
  }
  return out;
}

Scene parse_dataset(std::istream & source, const ParseOptions & options, DatasetFormat format)
{
  if (format != DatasetFormat::tsv) {
    throw ArgumentError("parse_dataset: unsupported format");
  }
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view view(line);
    const auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') {
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != 4) {
      throw ParseError(
        line_no, "expected 4 fields (frame_id ped_id x y), got " + std::to_string(fields.size()));
    }
    rows.push_back(
      {parse_integral(fields[0], line_no, "frame_id"), parse_integral(fields[1], line_no, "ped_id"),
       parse_real(fields[2], line_no, "x"), parse_real(fields[3], line_no, "y"), line_no});
  }

  Scene scene;
  scene.name = options.name;
  scene.frame_interval_s = options.frame_interval_s;
  if (rows.empty()) {
    return scene;
  }

  const std::int64_t stride =
    options.annotation_stride > 0 ? options.annotation_stride : infer_stride(rows);
  std::int64_t origin = rows.front().frame;
  for (const auto & r : rows) {
    origin = std::min(origin, r.frame);
  }
  scene.frame_origin = origin;
  scene.frame_stride = stride;

  std::map<PedestrianId, std::vector<const RawRow *>> by_ped;
  for (const auto & r : rows) {
    if ((r.frame - origin) % stride != 0) {
      throw DataError(
        "line " + std::to_string(r.line) + ": frame " + std::to_string(r.frame) +
        " is off the annotation stride " + std::to_string(stride));
    }
    by_ped[r.ped].push_back(&r);
  }
  for (auto & [ped, list] : by_ped) {
    std::sort(list.begin(), list.end(), [](const RawRow * a, const RawRow * b) {
      return a->frame < b->frame;
    });
    Trajectory traj;
    traj.pedestrian_id = ped;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i]->frame == list[i - 1]->frame) {
        throw DataError(
          "line " + std::to_string(list[i]->line) + ": duplicate row for frame " +
          std::to_string(list[i]->frame) + ", pedestrian " + std::to_string(ped));
      }
      traj.points.push_back({(list[i]->frame - origin) / stride, list[i]->x, list[i]->y});
    }
    scene.trajectories.push_back(std::move(traj));
  }
  return scene;
}

Scene parse_dataset_file(const std::filesystem::path & path, ParseOptions options)
{
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  if (options.name.empty()) {
    options.name = path.stem().string();
  }
  return parse_dataset(in, options);
}

void serialize_dataset(const Scene & scene, std::ostream & out)
{
  struct Row
  {
    std::int64_t frame;
    PedestrianId ped;
    double x, y;
  };
  std::vector<Row> rows;
  rows.reserve(scene.num_points());
  for (const auto & t : scene.trajectories) {
    for (const auto & p : t.points) {
      rows.push_back({scene.frame_origin + p.frame * scene.frame_stride, t.pedestrian_id, p.x, p.y});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row & a, const Row & b) {
    return a.frame != b.frame ? a.frame < b.frame : a.ped < b.ped;
  });
  char buf[128];
  for (const auto & r : rows) {
    std::snprintf(
      buf, sizeof(buf), "%lld\t%lld\t%.6f\t%.6f\n", static_cast<long long>(r.frame),
      static_cast<long long>(r.ped), r.x, r.y);
    out << buf;
  }
}

std::vector<PredictionSample> build_samples(
  const Scene & scene, std::size_t obs_len, std::size_t pred_len, std::size_t stride)
{
  if (obs_len < 1 || pred_len < 1 || stride < 1) {
    throw ArgumentError("build_samples: obs_len, pred_len and stride must be >= 1");
  }
  const std::size_t window = obs_len + pred_len;

  std::unordered_map<std::int64_t, std::vector<std::pair<PedestrianId, WorldPoint>>> by_frame;
  for (const auto & t : scene.trajectories) {
    for (const auto & p : t.points) {
      by_frame[p.frame].emplace_back(t.pedestrian_id, p.position());
    }
  }

  std::vector<PredictionSample> samples;
  for (const auto & traj : scene.trajectories) {
    const auto & pts = traj.points;
    std::size_t run_start = 0;
    while (run_start < pts.size()) {
      std::size_t run_end = run_start + 1;
      while (run_end < pts.size() && pts[run_end].frame == pts[run_end - 1].frame + 1) {
        ++run_end;
      }
      for (std::size_t s = run_start; s + window <= run_end; s += stride) {
        PredictionSample sample;
        sample.target_id = traj.pedestrian_id;
        sample.anchor_frame = pts[s].frame;
        for (std::size_t k = 0; k < window; ++k) {
          const WorldPoint p = pts[s + k].position();
          (k < obs_len ? sample.observed : sample.future).push_back(p);
          const auto it = by_frame.find(sample.anchor_frame + static_cast<std::int64_t>(k));
          if (it == by_frame.end()) {
            continue;
          }
          for (const auto & [id, pos] : it->second) {
            if (id == traj.pedestrian_id) {
              continue;
            }
            if (k < obs_len) {
              auto & path = sample.neighbor_observed[id];
              path.resize(obs_len);
              path[k] = pos;
            } else {
              auto & path = sample.neighbor_future[id];
              path.resize(pred_len);
              path[k - obs_len] = pos;
            }
          }
        }
        samples.push_back(std::move(sample));
      }
      run_start = run_end;
    }
  }
  return samples;
}

namespace
{
std::string lower(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}
}  // namespace

Split leave_one_out(const std::vector<Scene> & scenes, std::string_view held_out)
{
  const std::string wanted = lower(held_out);
  Split split;
  for (const auto & s : scenes) {
    (lower(s.name) == wanted ? split.test : split.train).push_back(s);
  }
  if (split.test.empty()) {
    throw ConfigError("unknown held-out scene '" + std::string(held_out) + "'");
  }
  return split;
}

std::vector<Scene> load_scenes(
  const std::filesystem::path & dir, const std::vector<std::string> & names)
{
  std::vector<Scene> scenes;
  for (const auto & name : names) {
    std::filesystem::path path;
    for (const char * ext : {".txt", ".tsv"}) {
      const auto candidate = dir / (name + ext);
      if (std::filesystem::exists(candidate)) {
        path = candidate;
        break;
      }
    }
    if (path.empty()) {
      throw ConfigError("scene '" + name + "' not found in " + dir.string());
    }
    ParseOptions options;
    options.name = name;
    scenes.push_back(parse_dataset_file(path, options));
  }
  return scenes;
}

PredictionSample flip_sample(
  const PredictionSample & sample, bool horizontal, bool vertical, const WorldPoint & center)
{
  auto flip = [&](WorldPoint p) {
    if (horizontal) {
      p.x = 2.0 * center.x - p.x;
    }
    if (vertical) {
      p.y = 2.0 * center.y - p.y;
    }
    return p;
  };
  PredictionSample out = sample;
  for (auto & p : out.observed) {
    p = flip(p);
  }
  for (auto & p : out.future) {
    p = flip(p);
  }
  for (auto * group : {&out.neighbor_observed, &out.neighbor_future}) {
    for (auto & [id, path] : *group) {
      for (auto & p : path) {
        if (p) {
          p = flip(*p);
        }
      }
    }
  }
  return out;
}

}  // namespace socprob::data
