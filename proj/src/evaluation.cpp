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

#include "socprob/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <utility>

#include "socprob/error.hpp"
#include "socprob/parallel.hpp"

namespace socprob::eval
{

namespace
{

std::size_t check_paths(const std::vector<Path> & pred, const std::vector<Path> & truth,
  const char * what)
{
  if (pred.empty() || pred.size() != truth.size()) {
    throw DimensionError(std::string(what) + ": expected the same non-zero number of paths, got " +
                         std::to_string(pred.size()) + " and " + std::to_string(truth.size()));
  }
  const std::size_t steps = truth.front().size();
  if (steps == 0) {
    throw DimensionError(std::string(what) + ": paths are empty");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != steps || truth[i].size() != steps) {
      throw DimensionError(std::string(what) + ": path " + std::to_string(i) +
                           " does not have " + std::to_string(steps) + " steps");
    }
  }
  return steps;
}

std::string format_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double ade(const std::vector<Path> & pred, const std::vector<Path> & truth)
{
  const std::size_t steps = check_paths(pred, truth, "ade");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t t = 0; t < steps; ++t) {
      total += distance(pred[i][t], truth[i][t]);
    }
  }
  return total / static_cast<double>(pred.size() * steps);
}

double fde(const std::vector<Path> & pred, const std::vector<Path> & truth)
{
  const std::size_t steps = check_paths(pred, truth, "fde");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    total += distance(pred[i][steps - 1], truth[i][steps - 1]);
  }
  return total / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------- rollout

namespace
{

using Positions = std::map<PedestrianId, WorldPoint>;

// Input map for a pedestrian who is not in `others`: only the other people.
pmap::ProbMap encode_others(const Positions & others, const pmap::GridSpec & spec,
  const pmap::EncodeOptions & opts)
{
  if (!opts.integrate_neighbors || others.empty()) {
    return pmap::ProbMap::zeros(spec);
  }
  std::vector<pmap::ProbMap> maps;
  maps.reserve(others.size());
  for (const auto & [id, p] : others) {
    maps.push_back(pmap::gaussian_map(pmap::GaussianParams::isotropic(p, opts.sigma_other), spec));
  }
  return pmap::compose_max(maps, spec);
}

pmap::ProbMap encode_for(const Positions & positions, PedestrianId id,
  const pmap::GridSpec & spec, const pmap::EncodeOptions & opts)
{
  if (positions.count(id) != 0) {
    return pmap::encode_frame(positions, id, spec, opts);
  }
  return encode_others(positions, spec, opts);
}

// Network state of every rolled-out pedestrian after the observed frames.
struct WarmState
{
  std::vector<PedestrianId> agents;  // target first
  std::vector<nn::StackRunner> runners;
  std::vector<Tensor> maps;  // latest predicted map per agent
  Positions statics;         // people who are not rolled out
  Positions current;         // last known position per agent
};

WarmState warm_up(const nn::StackParams & params, const data::PredictionSample & sample,
  const pmap::GridSpec & spec, const RolloutOptions & options)
{
  const std::size_t obs = sample.obs_len();
  if (obs == 0) {
    throw ArgumentError("rollout: sample has no observed steps");
  }
  const nn::StackConfig cfg = params.config();
  if (cfg.height != spec.height || cfg.width != spec.width) {
    throw DimensionError(
      "rollout: model grid " + std::to_string(cfg.width) + "x" + std::to_string(cfg.height) +
      " does not match " + std::to_string(spec.width) + "x" + std::to_string(spec.height));
  }

  std::vector<Positions> frames(obs);
  Positions last_seen;
  for (std::size_t t = 0; t < obs; ++t) {
    frames[t] = sample.positions_at(t);
    for (const auto & [id, p] : frames[t]) {
      last_seen[id] = p;
    }
  }

  WarmState w;
  w.agents.push_back(sample.target_id);
  if (options.mode == RolloutMode::joint) {
    for (const auto & [id, p] : frames[obs - 1]) {
      if (id != sample.target_id) {
        w.agents.push_back(id);
      }
    }
  }
  for (const auto & [id, p] : last_seen) {
    if (std::find(w.agents.begin(), w.agents.end(), id) == w.agents.end()) {
      w.statics[id] = p;
    }
  }
  for (PedestrianId id : w.agents) {
    w.current[id] = last_seen.at(id);
  }

  const nn::StackRunner prototype(params);
  w.runners.assign(w.agents.size(), prototype);
  w.maps.resize(w.agents.size());
  for (std::size_t t = 0; t < obs; ++t) {
    for (std::size_t a = 0; a < w.agents.size(); ++a) {
      const pmap::ProbMap input = encode_for(frames[t], w.agents[a], spec, options.encode);
      w.maps[a] = w.runners[a].step(input.grid);
    }
  }
  return w;
}

bool decode_one(const pmap::ProbMap & map, PedestrianId id, std::size_t step,
  const RolloutOptions & options, Rng & rng, WorldPoint & out)
{
  try {
    if (options.decoder) {
      out = options.decoder(map, id, step, rng);
      return true;
    }
    if (options.decode == DecodeMode::argmax) {
      const pmap::CellIndex c = pmap::argmax_cell(map);
      if (!(map.value(static_cast<std::size_t>(c.row), static_cast<std::size_t>(c.col)) > 0.0)) {
        return false;
      }
      out = map.spec.cell_center(static_cast<std::size_t>(c.row), static_cast<std::size_t>(c.col));
      return true;
    }
    out = pmap::sample_coordinate(map, rng);
    return true;
  } catch (const DecodeError &) {
    return false;
  }
}

RolloutResult finish(WarmState w, const pmap::GridSpec & spec, const RolloutOptions & options,
  Rng & rng)
{
  RolloutResult result;
  for (PedestrianId id : w.agents) {
    result.predicted[id].reserve(options.pred_len);
  }
  for (std::size_t j = 0; j < options.pred_len; ++j) {
    for (std::size_t a = 0; a < w.agents.size(); ++a) {
      const PedestrianId id = w.agents[a];
      const pmap::ProbMap map{std::move(w.maps[a]), spec};
      WorldPoint p;
      if (!decode_one(map, id, j, options, rng, p)) {
        p = w.current[id];
        ++result.decode_failures;
      }
      w.current[id] = p;
      result.predicted[id].push_back(p);
    }
    if (j + 1 == options.pred_len) {
      break;
    }
    Positions frame = w.statics;
    for (const auto & [id, p] : w.current) {
      frame[id] = p;
    }
    for (std::size_t a = 0; a < w.agents.size(); ++a) {
      const pmap::ProbMap input = pmap::encode_frame(frame, w.agents[a], spec, options.encode);
      w.maps[a] = w.runners[a].step(input.grid);
    }
  }
  return result;
}

}  // namespace

RolloutResult rollout(const nn::StackParams & params, const data::PredictionSample & sample,
  const pmap::GridSpec & spec, const RolloutOptions & options, Rng & rng)
{
  return finish(warm_up(params, sample, spec, options), spec, options, rng);
}

Selection select_best(const std::vector<Path> & candidates, const Path & truth)
{
  if (candidates.empty()) {
    throw ArgumentError("select_best: no candidates");
  }
  Selection s;
  s.ade = std::numeric_limits<double>::infinity();
  s.min_fde = std::numeric_limits<double>::infinity();
  const std::vector<Path> t{truth};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::vector<Path> c{candidates[i]};
    const double a = ade(c, t);
    const double f = fde(c, t);
    if (a < s.ade) {
      s.index = i;
      s.ade = a;
      s.fde = f;
    }
    s.min_fde = std::min(s.min_fde, f);
  }
  return s;
}

BestOfK best_of_k(const nn::StackParams & params, const data::PredictionSample & sample,
  const pmap::GridSpec & spec, const RolloutOptions & options, std::size_t k, Rng & rng)
{
  if (k == 0) {
    throw ArgumentError("best_of_k: k must be at least 1");
  }
  const WarmState warm = warm_up(params, sample, spec, options);
  BestOfK out;
  out.candidates.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    RolloutResult r = finish(warm, spec, options, rng);
    out.candidates.push_back(std::move(r.predicted.at(sample.target_id)));
  }
  out.selection = select_best(out.candidates, sample.future);
  return out;
}

// ---------------------------------------------------------------- baselines

Path linear_baseline(const Path & observed, std::size_t pred_len)
{
  const std::size_t n = observed.size();
  if (n < 2) {
    throw ArgumentError("linear_baseline: needs at least 2 observed points");
  }
  const double t_mean = static_cast<double>(n - 1) / 2.0;
  double x_mean = 0.0;
  double y_mean = 0.0;
  for (const auto & p : observed) {
    x_mean += p.x;
    y_mean += p.y;
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double stt = 0.0;
  double stx = 0.0;
  double sty = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    stt += dt * dt;
    stx += dt * (observed[t].x - x_mean);
    sty += dt * (observed[t].y - y_mean);
  }
  const double bx = stx / stt;
  const double by = sty / stt;
  Path out;
  out.reserve(pred_len);
  for (std::size_t j = 0; j < pred_len; ++j) {
    const double dt = static_cast<double>(n + j) - t_mean;
    out.push_back({x_mean + bx * dt, y_mean + by * dt});
  }
  return out;
}

Path stationary_baseline(const Path & observed, std::size_t pred_len)
{
  if (observed.empty()) {
    throw ArgumentError("stationary_baseline: needs at least 1 observed point");
  }
  return Path(pred_len, observed.back());
}

Predictor linear_predictor(std::size_t pred_len)
{
  return [pred_len](const data::PredictionSample & s, const pmap::GridSpec &, Rng &) {
    return std::vector<Path>{linear_baseline(s.observed, pred_len)};
  };
}

Predictor stationary_predictor(std::size_t pred_len)
{
  return [pred_len](const data::PredictionSample & s, const pmap::GridSpec &, Rng &) {
    return std::vector<Path>{stationary_baseline(s.observed, pred_len)};
  };
}

Predictor model_predictor(std::shared_ptr<const nn::StackParams> params, RolloutOptions options,
  std::size_t k)
{
  if (!params) {
    throw ArgumentError("model_predictor: no parameters");
  }
  if (options.decode == DecodeMode::argmax && !options.decoder) {
    k = 1;  // argmax rollouts are deterministic
  }
  return [params, options, k](const data::PredictionSample & s, const pmap::GridSpec & spec,
           Rng & rng) { return best_of_k(*params, s, spec, options, k, rng).candidates; };
}

// ---------------------------------------------------------------- benchmark

EvalSet make_eval_set(const data::Scene & scene, const BenchmarkOptions & options)
{
  EvalSet set;
  set.spec = pmap::fit_grid(scene, options.grid_width, options.grid_height, options.margin_frac);
  auto samples = data::build_samples(scene, options.obs_len, options.pred_len,
    options.sample_stride);
  if (options.max_samples > 0 && samples.size() > options.max_samples) {
    // Evenly spaced subset.
    std::vector<data::PredictionSample> subset;
    subset.reserve(options.max_samples);
    for (std::size_t i = 0; i < options.max_samples; ++i) {
      subset.push_back(std::move(samples[i * samples.size() / options.max_samples]));
    }
    samples = std::move(subset);
  }
  set.samples = std::move(samples);
  return set;
}

MetricReport evaluate(const EvalSet & set, const Predictor & predictor,
  const BenchmarkOptions & options, const std::string & name)
{
  const std::size_t n = set.samples.size();
  if (n == 0) {
    throw DataError("scene " + name + " has no complete " +
                    std::to_string(options.obs_len + options.pred_len) + "-step windows");
  }
  std::vector<Selection> selections(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, i));
    const auto candidates = predictor(set.samples[i], set.spec, rng);
    selections[i] = select_best(candidates, set.samples[i].future);
  });
  MetricReport r;
  r.dataset = name;
  r.num_pedestrians = n;
  r.num_samples_k = options.k;
  r.seed = options.seed;
  for (const auto & s : selections) {
    r.ade += s.ade;
    r.fde += s.fde;
    r.min_fde += s.min_fde;
  }
  r.ade /= static_cast<double>(n);
  r.fde /= static_cast<double>(n);
  r.min_fde /= static_cast<double>(n);
  return r;
}

std::vector<MetricReport> run_benchmark(const std::vector<data::Scene> & scenes,
  const std::vector<std::string> & held_out, const PredictorFactory & factory,
  const BenchmarkOptions & options)
{
  if (held_out.empty()) {
    throw ConfigError("run_benchmark: no held-out scene");
  }
  std::vector<MetricReport> rows;
  for (const auto & name : held_out) {
    const data::Split split = data::leave_one_out(scenes, name);
    const Predictor predictor = factory(split, name);
    const EvalSet set = make_eval_set(split.test.front(), options);
    rows.push_back(evaluate(set, predictor, options, split.test.front().name));
  }
  if (rows.size() > 1) {
    MetricReport avg;
    avg.dataset = "AVG";
    avg.num_samples_k = options.k;
    avg.seed = options.seed;
    for (const auto & r : rows) {
      avg.ade += r.ade;
      avg.fde += r.fde;
      avg.min_fde += r.min_fde;
      avg.num_pedestrians += r.num_pedestrians;
    }
    const double m = static_cast<double>(rows.size());
    avg.ade /= m;
    avg.fde /= m;
    avg.min_fde /= m;
    rows.push_back(avg);
  }
  return rows;
}

std::size_t ablation_size(AblationKind kind) { return kind == AblationKind::integration ? 2 : 4; }

std::vector<AblationRow> ablation_sweep(AblationKind kind,
  const std::vector<std::string> & checkpoints, const std::vector<data::Scene> & scenes,
  const std::string & held_out, const BenchmarkOptions & options, DecodeMode decode)
{
  const std::size_t expected = ablation_size(kind);
  if (checkpoints.size() != expected) {
    throw ConfigError("ablation sweep expects " + std::to_string(expected) +
                      " checkpoints, got " + std::to_string(checkpoints.size()));
  }
  for (const auto & path : checkpoints) {
    if (!std::filesystem::exists(path)) {
      throw ConfigError("missing checkpoint " + path);
    }
  }
  const data::Split split = data::leave_one_out(scenes, held_out);
  std::vector<AblationRow> rows;
  for (const auto & path : checkpoints) {
    const train::Checkpoint ckpt = train::load_checkpoint(path);
    BenchmarkOptions o = options;
    o.grid_width = ckpt.config.grid_width;
    o.grid_height = ckpt.config.grid_height;
    o.obs_len = ckpt.config.obs_len;
    o.pred_len = ckpt.config.pred_len;
    o.margin_frac = ckpt.config.margin_frac;
    RolloutOptions ro;
    ro.decode = decode;
    ro.encode = ckpt.config.encode_options();
    ro.pred_len = o.pred_len;
    const auto params = std::make_shared<const nn::StackParams>(ckpt.params);
    const EvalSet set = make_eval_set(split.test.front(), o);

    AblationRow row;
    row.kind = kind == AblationKind::integration ? "integration" : "map_size";
    row.setting = kind == AblationKind::integration
                    ? (ckpt.config.integrate_neighbors ? "on" : "off")
                    : std::to_string(o.grid_width) + "x" + std::to_string(o.grid_height);
    row.checkpoint = path;
    row.report = evaluate(set, model_predictor(params, ro, o.k), o, split.test.front().name);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SamplingErrorRow> sampling_error_sweep(const data::Scene & scene,
  const std::vector<std::size_t> & sizes, std::size_t k, std::uint64_t seed,
  const BenchmarkOptions & options, double sigma_target)
{
  if (k == 0) {
    throw ArgumentError("sampling_error_sweep: k must be at least 1");
  }
  std::vector<SamplingErrorRow> rows;
  for (std::size_t size : sizes) {
    BenchmarkOptions o = options;
    o.grid_width = size;
    o.grid_height = size;
    const EvalSet set = make_eval_set(scene, o);
    const std::size_t n = set.samples.size();
    if (n == 0) {
      throw DataError("sampling_error_sweep: scene " + scene.name + " has no complete windows");
    }
    std::vector<double> errors(n);
    parallel_for(n, options.threads, [&](std::size_t i) {
      const auto & sample = set.samples[i];
      std::vector<pmap::MapSampler> samplers;
      samplers.reserve(sample.future.size());
      for (const auto & p : sample.future) {
        samplers.emplace_back(
          pmap::gaussian_map(pmap::GaussianParams::isotropic(p, sigma_target), set.spec));
      }
      // Same stream per sample at every size.
      Rng rng(derive_seed(seed, i));
      std::vector<Path> candidates(k);
      for (auto & c : candidates) {
        c.reserve(samplers.size());
        for (const auto & s : samplers) {
          c.push_back(s.draw(rng));
        }
      }
      errors[i] = select_best(candidates, sample.future).ade;
    });
    SamplingErrorRow row;
    row.grid_size = size;
    row.cell_size = set.spec.cell_size;
    row.num_samples = n;
    for (double e : errors) {
      row.mean_error += e;
    }
    row.mean_error /= static_cast<double>(n);
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------- output

void write_metrics_csv(const std::vector<MetricReport> & rows, std::ostream & out)
{
  out << "scene,ade,fde,k,seed\n";
  for (const auto & r : rows) {
    out << r.dataset << ',' << format_double(r.ade) << ',' << format_double(r.fde) << ','
        << r.num_samples_k << ',' << r.seed << '\n';
  }
}

void write_ablation_csv(const std::vector<AblationRow> & rows, std::ostream & out)
{
  out << "kind,setting,checkpoint,scene,ade,fde,k,seed\n";
  for (const auto & row : rows) {
    const auto & r = row.report;
    out << row.kind << ',' << row.setting << ',' << row.checkpoint << ',' << r.dataset << ','
        << format_double(r.ade) << ',' << format_double(r.fde) << ',' << r.num_samples_k << ','
        << r.seed << '\n';
  }
}

void write_sampling_error_csv(const std::vector<SamplingErrorRow> & rows, std::ostream & out)
{
  out << "grid_size,cell_size,mean_error,num_samples\n";
  for (const auto & r : rows) {
    out << r.grid_size << ',' << format_double(r.cell_size) << ',' << format_double(r.mean_error)
        << ',' << r.num_samples << '\n';
  }
}

void write_overlay_csv(const data::PredictionSample & sample,
  const std::map<PedestrianId, Path> & predicted, std::ostream & out)
{
  const std::size_t obs = sample.obs_len();
  auto row = [&out](PedestrianId id, std::size_t step, const char * kind, const WorldPoint & p) {
    out << id << ',' << step << ',' << kind << ',' << format_double(p.x) << ','
        << format_double(p.y) << '\n';
  };
  auto masked = [&](PedestrianId id, const data::MaskedPath & path, std::size_t offset,
                  const char * kind) {
    for (std::size_t t = 0; t < path.size(); ++t) {
      if (path[t]) {
        row(id, offset + t, kind, *path[t]);
      }
    }
  };
  auto emit_pred = [&](PedestrianId id) {
    const auto it = predicted.find(id);
    if (it != predicted.end()) {
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        row(id, obs + j, "pred", it->second[j]);
      }
    }
  };

  out << "ped_id,step,kind,x,y\n";
  for (std::size_t t = 0; t < obs; ++t) {
    row(sample.target_id, t, "obs", sample.observed[t]);
  }
  for (std::size_t j = 0; j < sample.future.size(); ++j) {
    row(sample.target_id, obs + j, "gt", sample.future[j]);
  }
  emit_pred(sample.target_id);
  for (const auto & [id, path] : sample.neighbor_observed) {
    masked(id, path, 0, "obs");
    const auto fut = sample.neighbor_future.find(id);
    if (fut != sample.neighbor_future.end()) {
      masked(id, fut->second, obs, "gt");
    }
    emit_pred(id);
  }
  for (const auto & [id, path] : sample.neighbor_future) {
    if (sample.neighbor_observed.count(id) == 0) {
      masked(id, path, obs, "gt");
    }
  }
}

}  // namespace socprob::eval
