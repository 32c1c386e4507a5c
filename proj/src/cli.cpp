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

#include "socprob/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "socprob/error.hpp"
#include "socprob/evaluation.hpp"
#include "socprob/gradcheck.hpp"
#include "socprob/prob_map.hpp"
#include "socprob/training.hpp"
#include "socprob/trajectory_data.hpp"

namespace socprob::cli
{

namespace
{

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Context
{
  std::ostream & out;
  std::ostream & err;
  std::vector<std::string> args;
  Clock::time_point start = Clock::now();
  std::string command;
};

void write_atomic(const fs::path & path, const std::string & content)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) {
      throw IoError("cannot write " + tmp.string());
    }
    f << content;
    if (!f) {
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

struct Manifest
{
  const train::TrainConfig * config = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> extra;
};

// `<artifact>.manifest.json`, or `<dir>/manifest.json` for directory outputs.
void write_manifest(const Context & ctx, const fs::path & location, const Manifest & m)
{
  nlohmann::ordered_json j;
  j["command"] = ctx.command;
  j["argv"] = ctx.args;
  j["tool_version"] = kVersion;
  j["seed"] = m.seed;
  if (m.config) {
    nlohmann::ordered_json cfg;
    for (const auto & [k, v] : m.config->to_key_values()) {
      cfg[k] = v;
    }
    j["config"] = cfg;
  }
  for (const auto & [k, v] : m.extra) {
    j["options"][k] = v;
  }
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["duration_s"] = std::chrono::duration<double>(Clock::now() - ctx.start).count();
  write_atomic(location, j.dump(2) + "\n");
}

void emit(const Context & ctx, const std::string & path, const std::string & content,
  const Manifest & manifest)
{
  if (path.empty()) {
    ctx.out << content;
    return;
  }
  write_atomic(path, content);
  Manifest m = manifest;
  m.outputs.insert(m.outputs.begin(), path);
  write_manifest(ctx, path + ".manifest.json", m);
}

void progress(const Context & ctx, const std::string & line)
{
  ctx.err << "socprob " << ctx.command << ": " << line << '\n' << std::flush;
}

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- shared flags

// Protocol flags that map onto config keys; applied after the config file.
struct ConfigFlags
{
  std::string config_file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::Option *, std::string>> options;
  bool no_integration = false;
  bool augment_flip = false;

  void add(CLI::App * app, const std::string & flag, const std::string & key,
    const std::string & help)
  {
    options.emplace_back(app->add_option(flag, values[key], help), key);
  }

  train::TrainConfig resolve(train::TrainConfig base = {}) const
  {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) {
        throw IoError("cannot read config file " + config_file);
      }
      base = train::read_config(in, base);
    }
    for (const auto & [opt, key] : options) {
      if (opt->count() > 0) {
        base.set(key, values.at(key));
      }
    }
    if (no_integration) {
      base.integrate_neighbors = false;
    }
    if (augment_flip) {
      base.augment_flip = true;
    }
    base.validate();
    return base;
  }
};

void add_protocol_flags(CLI::App * app, ConfigFlags & f)
{
  app->add_option("--config", f.config_file, "key=value config file (flags override it)");
  f.add(app, "--grid", "grid", "Grid size WxH");
  f.add(app, "--sigma-target", "sigma_target", "Target Gaussian sigma (m)");
  f.add(app, "--sigma-other", "sigma_other", "Neighbor Gaussian sigma (m)");
  f.add(app, "--obs-len", "obs_len", "Observed steps");
  f.add(app, "--pred-len", "pred_len", "Predicted steps");
  f.add(app, "--seed", "seed", "Random seed");
  f.add(app, "--margin-frac", "margin_frac", "Grid margin per side, fraction of the extent");
  f.add(app, "--sample-stride", "sample_stride", "Window stride in steps");
  app->add_flag("--no-integration", f.no_integration, "Encode the target alone");
}

void add_training_flags(CLI::App * app, ConfigFlags & f)
{
  f.add(app, "--epochs", "epochs", "Training epochs");
  f.add(app, "--batch-size", "batch_size", "Samples per batch");
  f.add(app, "--lr", "lr", "Adam learning rate");
  f.add(app, "--channels", "channels", "Hidden channels per layer, e.g. 128,64,64,32,32");
  f.add(app, "--kernel", "kernel", "Convolution kernel size");
  f.add(app, "--clip-norm", "clip_norm", "Global gradient norm limit");
  app->add_flag("--augment-flip", f.augment_flip, "Random horizontal/vertical flips");
}

struct SceneSource
{
  std::string data;
  std::string input;
  std::string scene;

  fs::path data_dir() const
  {
    if (!data.empty()) {
      return data;
    }
    if (const char * env = std::getenv("SOCPROB_DATA"); env && *env) {
      return env;
    }
    throw ConfigError("no data directory: pass --data or set SOCPROB_DATA");
  }

  data::Scene load() const
  {
    if (!input.empty()) {
      data::ParseOptions opts;
      opts.name = scene.empty() ? fs::path(input).stem().string() : scene;
      return data::parse_dataset_file(input, opts);
    }
    if (scene.empty()) {
      throw ArgumentError("pass --input FILE or --scene NAME");
    }
    return data::load_scenes(data_dir(), {scene}).front();
  }

  std::string describe() const { return input.empty() ? (data_dir() / scene).string() : input; }
};

void add_scene_flags(CLI::App * app, SceneSource & s)
{
  app->add_option("--data", s.data, "Dataset directory (default: $SOCPROB_DATA)");
  app->add_option("--input", s.input, "Single dataset file");
  app->add_option("--scene", s.scene, "Scene name inside the data directory");
}

std::vector<std::string> expand_scene_names(const std::vector<std::string> & names)
{
  std::vector<std::string> out;
  for (const auto & n : names) {
    if (n == "all") {
      const auto & all = data::benchmark_scene_names();
      out.insert(out.end(), all.begin(), all.end());
    } else {
      out.push_back(n);
    }
  }
  return out;
}

template <typename T>
std::vector<T> evenly_spaced(std::vector<T> items, std::size_t limit)
{
  if (limit == 0 || items.size() <= limit) {
    return items;
  }
  std::vector<T> out;
  out.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) {
    out.push_back(std::move(items[i * items.size() / limit]));
  }
  return out;
}

eval::DecodeMode parse_decode(const std::string & s)
{
  return s == "argmax" ? eval::DecodeMode::argmax : eval::DecodeMode::sample;
}

eval::RolloutMode parse_mode(const std::string & s)
{
  return s == "frozen" ? eval::RolloutMode::frozen : eval::RolloutMode::joint;
}

const data::PredictionSample & pick_sample(const std::vector<data::PredictionSample> & samples,
  std::size_t index, const std::string & scene)
{
  if (index >= samples.size()) {
    throw ArgumentError("--sample-index " + std::to_string(index) + " out of range: scene " +
                        scene + " has " + std::to_string(samples.size()) + " samples");
  }
  return samples[index];
}

// ---------------------------------------------------------------- ingest

struct IngestArgs
{
  SceneSource source;
  std::int64_t stride = 0;
  double frame_interval = 0.4;
  std::string out;
};

int cmd_ingest(Context & ctx, const IngestArgs & a)
{
  data::Scene scene;
  if (!a.source.input.empty()) {
    data::ParseOptions opts;
    opts.name = a.source.scene.empty() ? fs::path(a.source.input).stem().string() : a.source.scene;
    opts.annotation_stride = a.stride;
    opts.frame_interval_s = a.frame_interval;
    scene = data::parse_dataset_file(a.source.input, opts);
  } else {
    scene = a.source.load();
  }
  progress(ctx, "scene=" + scene.name + " pedestrians=" + std::to_string(scene.trajectories.size()) +
                  " points=" + std::to_string(scene.num_points()) +
                  " stride=" + std::to_string(scene.frame_stride));
  std::ostringstream ss;
  data::serialize_dataset(scene, ss);
  Manifest m;
  m.inputs = {a.source.describe()};
  emit(ctx, a.out, ss.str(), m);
  return kSuccess;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs
{
  SceneSource source;
  ConfigFlags flags;
  std::int64_t frame = 0;
  std::int64_t target = 0;
  std::string format;
  std::string out;
};

std::string render_map(const pmap::ProbMap & map, const std::string & format)
{
  std::ostringstream ss;
  if (format == "csv") {
    pmap::write_csv(map, ss);
  } else {
    pmap::write_pgm(map, ss);
  }
  return ss.str();
}

std::string format_for(const std::string & flag, const std::string & path)
{
  if (!flag.empty()) {
    return flag;
  }
  return fs::path(path).extension() == ".csv" ? "csv" : "pgm";
}

int cmd_encode(Context & ctx, const EncodeArgs & a)
{
  const train::TrainConfig cfg = a.flags.resolve();
  const data::Scene scene = a.source.load();
  const pmap::GridSpec spec = pmap::fit_grid(scene, cfg.grid_width, cfg.grid_height,
    cfg.margin_frac);
  std::map<PedestrianId, WorldPoint> positions;
  for (const auto & tr : scene.trajectories) {
    for (const auto & p : tr.points) {
      if (p.frame == a.frame) {
        positions[tr.pedestrian_id] = p.position();
      }
    }
  }
  if (positions.count(a.target) == 0) {
    throw ArgumentError("pedestrian " + std::to_string(a.target) + " is not present at step " +
                        std::to_string(a.frame));
  }
  const pmap::ProbMap map = pmap::encode_frame(positions, a.target, spec, cfg.encode_options());
  progress(ctx, "step=" + std::to_string(a.frame) + " pedestrians=" +
                  std::to_string(positions.size()) + " cell_size=" + fmt(spec.cell_size));
  Manifest m;
  m.config = &cfg;
  m.seed = cfg.seed;
  m.inputs = {a.source.describe()};
  emit(ctx, a.out, render_map(map, format_for(a.format, a.out)), m);
  return kSuccess;
}

// ---------------------------------------------------------------- train

struct TrainArgs
{
  SceneSource source;
  ConfigFlags flags;
  std::string held_out;
  std::vector<std::string> train_scenes;
  std::size_t max_samples = 0;
  std::size_t threads = 0;
  std::string checkpoint;
  std::string resume;
  std::string out;
};

int cmd_train(Context & ctx, const TrainArgs & a)
{
  const train::TrainConfig cfg = a.flags.resolve();
  std::vector<std::string> names;
  if (!a.train_scenes.empty()) {
    names = expand_scene_names(a.train_scenes);
  } else if (!a.held_out.empty()) {
    const auto all = data::benchmark_scene_names();
    const bool known = std::any_of(all.begin(), all.end(), [&](const std::string & n) {
      return n == a.held_out;
    });
    if (!known) {
      throw ConfigError("unknown held-out scene '" + a.held_out + "'");
    }
    for (const auto & n : all) {
      if (n != a.held_out) {
        names.push_back(n);
      }
    }
  } else if (!a.source.input.empty()) {
    names.clear();
  } else {
    throw ArgumentError("pass --held-out NAME, --train-scenes LIST or --input FILE");
  }

  std::vector<data::Scene> scenes;
  std::vector<std::string> inputs;
  if (names.empty()) {
    scenes.push_back(a.source.load());
    inputs.push_back(a.source.input);
  } else {
    const fs::path dir = a.source.data_dir();
    scenes = data::load_scenes(dir, names);
    for (const auto & n : names) {
      inputs.push_back((dir / n).string());
    }
  }
  auto examples = evenly_spaced(train::prepare_examples(scenes, cfg), a.max_samples);
  progress(ctx, "scenes=" + std::to_string(scenes.size()) + " samples=" +
                  std::to_string(examples.size()) + " grid=" + std::to_string(cfg.grid_width) +
                  "x" + std::to_string(cfg.grid_height));

  train::TrainOptions opts;
  opts.threads = a.threads;
  train::Checkpoint resume;
  if (!a.resume.empty()) {
    resume = train::load_checkpoint(a.resume);
    opts.resume = &resume;
    inputs.push_back(a.resume);
  }
  opts.on_epoch = [&ctx](const train::LossRecord & r) {
    progress(ctx, "epoch=" + std::to_string(r.epoch) + " mean_loss=" + fmt(r.mean_loss));
  };
  const train::TrainResult result = train::train(examples, cfg, opts);

  if (a.checkpoint.empty()) {
    throw ArgumentError("--checkpoint PATH is required");
  }
  if (a.checkpoint.find('/') != std::string::npos) {
    fs::create_directories(fs::path(a.checkpoint).parent_path());
  }
  train::save_checkpoint(a.checkpoint, result.checkpoint);
  Manifest m;
  m.config = &cfg;
  m.seed = cfg.seed;
  m.inputs = inputs;
  m.outputs = {a.checkpoint};
  if (!a.out.empty()) {
    m.outputs.push_back(a.out);
  }
  m.extra["max_samples"] = std::to_string(a.max_samples);
  write_manifest(ctx, a.checkpoint + ".manifest.json", m);
  std::ostringstream log;
  train::write_loss_log(result.log, log);
  if (a.out.empty()) {
    ctx.out << log.str();
  } else {
    write_atomic(a.out, log.str());
    write_manifest(ctx, a.out + ".manifest.json", m);
  }
  progress(ctx, "checkpoint=" + a.checkpoint);
  return kSuccess;
}

// ---------------------------------------------------------------- predict

struct PredictArgs
{
  SceneSource source;
  std::string checkpoint;
  std::size_t sample_index = 0;
  std::size_t k = 20;
  std::uint64_t seed = 1;
  std::string decode = "both";
  std::string mode = "joint";
  std::string out;
};

eval::RolloutOptions rollout_options(const train::TrainConfig & cfg, const std::string & decode,
  const std::string & mode)
{
  eval::RolloutOptions ro;
  ro.decode = parse_decode(decode);
  ro.mode = parse_mode(mode);
  ro.encode = cfg.encode_options();
  ro.pred_len = cfg.pred_len;
  return ro;
}

int cmd_predict(Context & ctx, const PredictArgs & a)
{
  if (a.checkpoint.empty()) {
    throw ArgumentError("--checkpoint PATH is required");
  }
  const train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
  const train::TrainConfig & cfg = ckpt.config;
  const data::Scene scene = a.source.load();
  const pmap::GridSpec spec = pmap::fit_grid(scene, cfg.grid_width, cfg.grid_height,
    cfg.margin_frac);
  const auto samples = data::build_samples(scene, cfg.obs_len, cfg.pred_len, 1);
  const data::PredictionSample & sample = pick_sample(samples, a.sample_index, scene.name);

  std::map<PedestrianId, Path> shown;
  std::string candidates_csv;
  if (a.decode == "argmax" || a.decode == "both") {
    Rng rng(a.seed);
    const auto r = eval::rollout(ckpt.params, sample, spec,
      rollout_options(cfg, "argmax", a.mode), rng);
    const auto s = eval::select_best({r.predicted.at(sample.target_id)}, sample.future);
    progress(ctx, "decode=argmax ade=" + fmt(s.ade) + " fde=" + fmt(s.fde) +
                    " decode_failures=" + std::to_string(r.decode_failures));
    shown = r.predicted;
  }
  if (a.decode == "sample" || a.decode == "both") {
    Rng rng(a.seed);
    const auto ro = rollout_options(cfg, "sample", a.mode);
    std::vector<eval::RolloutResult> runs;
    std::vector<Path> paths;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < std::max<std::size_t>(a.k, 1); ++i) {
      runs.push_back(eval::rollout(ckpt.params, sample, spec, ro, rng));
      paths.push_back(runs.back().predicted.at(sample.target_id));
      failures += runs.back().decode_failures;
    }
    const auto s = eval::select_best(paths, sample.future);
    progress(ctx, "decode=sample k=" + std::to_string(paths.size()) + " min_ade=" + fmt(s.ade) +
                    " fde=" + fmt(s.fde) + " min_fde=" + fmt(s.min_fde) +
                    " decode_failures=" + std::to_string(failures));
    if (shown.empty()) {
      shown = runs[s.index].predicted;
    }
    std::ostringstream cs;
    cs << "candidate,step,x,y\n";
    for (std::size_t c = 0; c < paths.size(); ++c) {
      for (std::size_t j = 0; j < paths[c].size(); ++j) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.6f\n", c, sample.obs_len() + j,
          paths[c][j].x, paths[c][j].y);
        cs << buf;
      }
    }
    candidates_csv = cs.str();
  }

  std::ostringstream overlay;
  eval::write_overlay_csv(sample, shown, overlay);
  Manifest m;
  m.config = &cfg;
  m.seed = a.seed;
  m.inputs = {a.checkpoint, a.source.describe()};
  m.extra = {{"sample_index", std::to_string(a.sample_index)}, {"k", std::to_string(a.k)},
    {"decode", a.decode}, {"mode", a.mode}};
  emit(ctx, a.out, overlay.str(), m);
  if (!a.out.empty() && !candidates_csv.empty()) {
    emit(ctx, a.out + ".samples.csv", candidates_csv, m);
  }
  return kSuccess;
}

// ---------------------------------------------------------------- eval / baseline

struct EvalArgs
{
  SceneSource source;
  ConfigFlags flags;
  std::vector<std::string> held_out;
  std::string baseline;
  std::string checkpoint;
  std::size_t k = 20;
  std::string decode = "sample";
  std::string mode = "joint";
  std::size_t max_samples = 0;
  std::size_t threads = 0;
  std::string sweep;
  std::vector<std::string> checkpoints;
  bool sampling_sweep = false;
  std::vector<std::size_t> sizes{80, 100, 150, 200};
  std::string out;
};

eval::BenchmarkOptions benchmark_options(const train::TrainConfig & cfg, const EvalArgs & a)
{
  eval::BenchmarkOptions o;
  o.obs_len = cfg.obs_len;
  o.pred_len = cfg.pred_len;
  o.sample_stride = cfg.sample_stride;
  o.grid_width = cfg.grid_width;
  o.grid_height = cfg.grid_height;
  o.margin_frac = cfg.margin_frac;
  o.seed = cfg.seed;
  o.threads = a.threads;
  o.max_samples = a.max_samples;
  o.k = a.k;
  return o;
}

std::vector<data::Scene> load_eval_scenes(const EvalArgs & a, std::vector<std::string> & names,
  std::vector<std::string> & inputs)
{
  if (!a.source.input.empty()) {
    data::Scene s = a.source.load();
    names = {s.name};
    inputs = {a.source.input};
    return {s};
  }
  names = expand_scene_names(a.held_out);
  if (names.empty() && !a.source.scene.empty()) {
    names = {a.source.scene};
  }
  if (names.empty()) {
    throw ArgumentError("pass --held-out NAME (or 'all'), --scene NAME or --input FILE");
  }
  const fs::path dir = a.source.data_dir();
  for (const auto & n : names) {
    inputs.push_back((dir / n).string());
  }
  return data::load_scenes(dir, names);
}

std::string substitute(std::string pattern, const std::string & held_out)
{
  const std::string key = "{held_out}";
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key)) {
    pattern.replace(pos, key.size(), held_out);
  }
  return pattern;
}

int cmd_eval(Context & ctx, const EvalArgs & a)
{
  train::TrainConfig cfg = a.flags.resolve();
  std::vector<std::string> names;
  std::vector<std::string> inputs;
  const auto scenes = load_eval_scenes(a, names, inputs);
  Manifest m;
  m.inputs = inputs;
  m.extra = {{"k", std::to_string(a.k)}, {"decode", a.decode}, {"mode", a.mode},
    {"max_samples", std::to_string(a.max_samples)}};

  if (a.sampling_sweep) {
    if (scenes.size() != 1) {
      throw ArgumentError("--sampling-sweep evaluates exactly one scene");
    }
    eval::BenchmarkOptions o = benchmark_options(cfg, a);
    const auto rows = eval::sampling_error_sweep(scenes.front(), a.sizes, a.k, cfg.seed, o,
      cfg.sigma_target);
    for (const auto & r : rows) {
      progress(ctx, "size=" + std::to_string(r.grid_size) + " cell_size=" + fmt(r.cell_size) +
                      " mean_error=" + fmt(r.mean_error));
    }
    std::ostringstream ss;
    eval::write_sampling_error_csv(rows, ss);
    m.config = &cfg;
    m.seed = cfg.seed;
    emit(ctx, a.out, ss.str(), m);
    return kSuccess;
  }

  if (!a.sweep.empty()) {
    if (names.size() != 1) {
      throw ArgumentError("--sweep evaluates exactly one held-out scene");
    }
    const auto kind =
      a.sweep == "integration" ? eval::AblationKind::integration : eval::AblationKind::map_size;
    const auto rows = eval::ablation_sweep(kind, a.checkpoints, scenes, names.front(),
      benchmark_options(cfg, a), parse_decode(a.decode));
    for (const auto & r : rows) {
      progress(ctx, r.kind + "=" + r.setting + " ade=" + fmt(r.report.ade) +
                      " fde=" + fmt(r.report.fde));
    }
    std::ostringstream ss;
    eval::write_ablation_csv(rows, ss);
    m.seed = cfg.seed;
    m.inputs.insert(m.inputs.end(), a.checkpoints.begin(), a.checkpoints.end());
    emit(ctx, a.out, ss.str(), m);
    return kSuccess;
  }

  eval::BenchmarkOptions o = benchmark_options(cfg, a);
  eval::PredictorFactory factory;
  if (!a.baseline.empty()) {
    if (!a.checkpoint.empty()) {
      throw ArgumentError("--baseline and --checkpoint are mutually exclusive");
    }
    o.k = 1;
    const std::size_t pred_len = cfg.pred_len;
    const bool linear = a.baseline == "linear";
    factory = [pred_len, linear](const data::Split &, const std::string &) {
      return linear ? eval::linear_predictor(pred_len) : eval::stationary_predictor(pred_len);
    };
    m.config = &cfg;
  } else if (!a.checkpoint.empty()) {
    // The model fixes grid, window and encoding; a "{held_out}" placeholder
    // selects one checkpoint per held-out scene.
    const train::Checkpoint first = train::load_checkpoint(substitute(a.checkpoint, names.front()));
    cfg = first.config;
    o = benchmark_options(cfg, a);
    if (parse_decode(a.decode) == eval::DecodeMode::argmax) {
      o.k = 1;
    }
    m.config = &cfg;
    const std::string pattern = a.checkpoint;
    const std::string decode = a.decode;
    const std::string mode = a.mode;
    const std::size_t k = a.k;
    factory = [pattern, decode, mode, k, &m](const data::Split &, const std::string & held_out) {
      const std::string path = substitute(pattern, held_out);
      const train::Checkpoint ckpt = train::load_checkpoint(path);
      m.inputs.push_back(path);
      return eval::model_predictor(std::make_shared<const nn::StackParams>(ckpt.params),
        rollout_options(ckpt.config, decode, mode), k);
    };
  } else {
    throw ArgumentError("pass --baseline linear|stationary or --checkpoint PATH");
  }
  m.seed = o.seed;

  const auto rows = eval::run_benchmark(scenes, names, factory, o);
  for (const auto & r : rows) {
    progress(ctx, "scene=" + r.dataset + " ade=" + fmt(r.ade) + " fde=" + fmt(r.fde) +
                    " min_fde=" + fmt(r.min_fde) + " pedestrians=" +
                    std::to_string(r.num_pedestrians));
  }
  std::ostringstream ss;
  eval::write_metrics_csv(rows, ss);
  emit(ctx, a.out, ss.str(), m);
  return kSuccess;
}

// ---------------------------------------------------------------- export

struct ExportArgs
{
  SceneSource source;
  ConfigFlags flags;
  std::string checkpoint;
  std::size_t sample_index = 0;
  std::string format = "pgm";
  std::string out;
};

int cmd_export(Context & ctx, const ExportArgs & a)
{
  if (a.out.empty()) {
    throw ArgumentError("--out DIR is required");
  }
  train::TrainConfig cfg = a.flags.resolve();
  std::unique_ptr<train::Checkpoint> ckpt;
  if (!a.checkpoint.empty()) {
    ckpt = std::make_unique<train::Checkpoint>(train::load_checkpoint(a.checkpoint));
    cfg = ckpt->config;
  }
  const data::Scene scene = a.source.load();
  const pmap::GridSpec spec = pmap::fit_grid(scene, cfg.grid_width, cfg.grid_height,
    cfg.margin_frac);
  const auto samples = data::build_samples(scene, cfg.obs_len, cfg.pred_len, 1);
  const data::PredictionSample & sample = pick_sample(samples, a.sample_index, scene.name);
  const train::TrainingPair pair = train::make_training_pair(sample, cfg, spec);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  const std::string ext = a.format == "csv" ? ".csv" : ".pgm";
  std::vector<std::string> outputs;
  auto put = [&](const std::string & stem, std::size_t t, const pmap::ProbMap & map) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%02zu", stem.c_str(), t);
    const fs::path p = dir / (name + ext);
    write_atomic(p, render_map(map, a.format));
    outputs.push_back(p.string());
  };
  for (std::size_t t = 0; t < pair.inputs.size(); ++t) {
    put("input", t, pair.inputs[t]);
  }
  for (std::size_t j = 0; j < pair.targets.size(); ++j) {
    put("target", cfg.obs_len + j, pair.targets[j]);
  }
  if (ckpt) {
    std::vector<Tensor> inputs;
    for (const auto & m : pair.inputs) {
      inputs.push_back(m.grid);
    }
    const auto fwd = nn::stack_forward(inputs, ckpt->params, false);
    for (std::size_t t = 0; t < fwd.predictions.size(); ++t) {
      put("pred", t + 1, pmap::ProbMap{fwd.predictions[t], spec});
    }
  }
  std::ostringstream overlay;
  eval::write_overlay_csv(sample, {}, overlay);
  write_atomic(dir / "trajectories.csv", overlay.str());
  outputs.push_back((dir / "trajectories.csv").string());
  progress(ctx, "wrote " + std::to_string(outputs.size()) + " files to " + dir.string());

  Manifest m;
  m.config = &cfg;
  m.seed = cfg.seed;
  m.inputs = {a.source.describe()};
  if (ckpt) {
    m.inputs.push_back(a.checkpoint);
  }
  m.outputs = outputs;
  m.extra = {{"sample_index", std::to_string(a.sample_index)}};
  write_manifest(ctx, dir / "manifest.json", m);
  return kSuccess;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs
{
  bool tiny = false;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
};

int cmd_gradcheck(Context & ctx, const GradcheckArgs & a)
{
  if (!a.tiny) {
    throw ArgumentError("only the --tiny suite is available");
  }
  const auto report = train::tiny_gradient_check(a.seed);
  ctx.out << "parameter,count,max_rel_error\n";
  for (const auto & e : report.entries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.3e\n", e.name.c_str(), e.count, e.max_rel_error);
    ctx.out << buf;
  }
  const bool ok = report.passed(a.tolerance);
  progress(ctx, std::string(ok ? "passed" : "FAILED") + " max_rel_error=" +
                  fmt(report.max_rel_error) + " tolerance=" + fmt(a.tolerance));
  return ok ? kSuccess : kNumericError;
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  Context ctx{out, err, args, Clock::now(), ""};

  CLI::App app{"Probability-map trajectory forecasting with a convolutional LSTM", "socprob"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  IngestArgs ingest;
  auto * c_ingest = app.add_subcommand("ingest", "Parse a dataset and write it in canonical form");
  add_scene_flags(c_ingest, ingest.source);
  c_ingest->add_option("--annotation-stride", ingest.stride,
    "Raw frame ids per time step (0 = infer)");
  c_ingest->add_option("--frame-interval", ingest.frame_interval, "Seconds per time step");
  c_ingest->add_option("--out", ingest.out, "Output file (default: standard output)");

  EncodeArgs encode;
  auto * c_encode = app.add_subcommand("encode", "Render one time step as a probability map");
  add_scene_flags(c_encode, encode.source);
  add_protocol_flags(c_encode, encode.flags);
  c_encode->add_option("--frame", encode.frame, "Time-step index")->required();
  c_encode->add_option("--target", encode.target, "Target pedestrian id")->required();
  c_encode->add_option("--format", encode.format, "pgm or csv (default: from --out)")
    ->check(CLI::IsMember({"pgm", "csv"}));
  c_encode->add_option("--out", encode.out, "Output file (default: standard output)");

  TrainArgs tr;
  auto * c_train = app.add_subcommand("train", "Train the network with teacher forcing");
  add_scene_flags(c_train, tr.source);
  add_protocol_flags(c_train, tr.flags);
  add_training_flags(c_train, tr.flags);
  c_train->add_option("--held-out", tr.held_out, "Train on every benchmark scene but this one");
  c_train->add_option("--train-scenes", tr.train_scenes, "Explicit training scenes")
    ->delimiter(',');
  c_train->add_option("--max-samples", tr.max_samples, "Evenly spaced subset (0 = all)");
  c_train->add_option("--threads", tr.threads, "Worker threads (0 = all cores)");
  c_train->add_option("--checkpoint", tr.checkpoint, "Checkpoint to write")->required();
  c_train->add_option("--resume", tr.resume, "Continue from this checkpoint");
  c_train->add_option("--out", tr.out, "Loss log CSV (default: standard output)");

  PredictArgs pr;
  auto * c_predict = app.add_subcommand("predict", "Roll out one sample and export overlays");
  add_scene_flags(c_predict, pr.source);
  c_predict->add_option("--checkpoint", pr.checkpoint, "Trained checkpoint")->required();
  c_predict->add_option("--sample-index", pr.sample_index, "Sample within the scene");
  c_predict->add_option("--k", pr.k, "Sampled rollouts");
  c_predict->add_option("--seed", pr.seed, "Random seed");
  c_predict->add_option("--decode", pr.decode, "sample, argmax or both")
    ->check(CLI::IsMember({"sample", "argmax", "both"}));
  c_predict->add_option("--mode", pr.mode, "joint or frozen neighbors")
    ->check(CLI::IsMember({"joint", "frozen"}));
  c_predict->add_option("--out", pr.out, "Overlay CSV (default: standard output)");

  EvalArgs ev;
  EvalArgs bl;
  auto add_eval_flags = [](CLI::App * c, EvalArgs & e) {
    add_scene_flags(c, e.source);
    add_protocol_flags(c, e.flags);
    c->add_option("--held-out", e.held_out, "Held-out scene(s), or 'all'")->delimiter(',');
    c->add_option("--k", e.k, "Sampled rollouts per sample (best-of-k)");
    c->add_option("--max-samples", e.max_samples, "Evenly spaced subset per scene (0 = all)");
    c->add_option("--threads", e.threads, "Worker threads (0 = all cores)");
    c->add_option("--out", e.out, "Output CSV (default: standard output)");
  };
  auto * c_eval = app.add_subcommand("eval", "ADE/FDE of a model or baseline, and sweeps");
  add_eval_flags(c_eval, ev);
  c_eval->add_option("--baseline", ev.baseline, "linear or stationary")
    ->check(CLI::IsMember({"linear", "stationary"}));
  c_eval->add_option("--checkpoint", ev.checkpoint,
    "Model checkpoint; {held_out} is replaced per scene");
  c_eval->add_option("--decode", ev.decode, "sample or argmax")
    ->check(CLI::IsMember({"sample", "argmax"}));
  c_eval->add_option("--mode", ev.mode, "joint or frozen neighbors")
    ->check(CLI::IsMember({"joint", "frozen"}));
  c_eval->add_option("--sweep", ev.sweep, "integration or map_size ablation")
    ->check(CLI::IsMember({"integration", "map_size"}));
  c_eval->add_option("--checkpoints", ev.checkpoints, "Checkpoints for --sweep")->delimiter(',');
  c_eval->add_flag("--sampling-sweep", ev.sampling_sweep,
    "Decode error of ground-truth maps over grid sizes");
  c_eval->add_option("--sizes", ev.sizes, "Grid sizes for --sampling-sweep")->delimiter(',');

  auto * c_baseline = app.add_subcommand("baseline", "ADE/FDE of a non-learned baseline");
  add_eval_flags(c_baseline, bl);
  bl.baseline = "linear";
  c_baseline->add_option("--kind", bl.baseline, "linear or stationary")
    ->check(CLI::IsMember({"linear", "stationary"}));

  ExportArgs ex;
  auto * c_export = app.add_subcommand("export", "Write a sample's maps and tracks for figures");
  add_scene_flags(c_export, ex.source);
  add_protocol_flags(c_export, ex.flags);
  c_export->add_option("--checkpoint", ex.checkpoint, "Also export teacher-forced predictions");
  c_export->add_option("--sample-index", ex.sample_index, "Sample within the scene");
  c_export->add_option("--format", ex.format, "pgm or csv")
    ->check(CLI::IsMember({"pgm", "csv"}));
  c_export->add_option("--out", ex.out, "Output directory")->required();

  GradcheckArgs gc;
  auto * c_gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  c_gradcheck->add_flag("--tiny", gc.tiny, "1 layer, 2 channels, 6x6 grid, 3 steps");
  c_gradcheck->add_option("--seed", gc.seed, "Random seed");
  c_gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError & e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsage;
  }

  try {
    if (c_ingest->parsed()) {
      ctx.command = "ingest";
      return cmd_ingest(ctx, ingest);
    }
    if (c_encode->parsed()) {
      ctx.command = "encode";
      return cmd_encode(ctx, encode);
    }
    if (c_train->parsed()) {
      ctx.command = "train";
      return cmd_train(ctx, tr);
    }
    if (c_predict->parsed()) {
      ctx.command = "predict";
      return cmd_predict(ctx, pr);
    }
    if (c_eval->parsed()) {
      ctx.command = "eval";
      return cmd_eval(ctx, ev);
    }
    if (c_baseline->parsed()) {
      ctx.command = "baseline";
      return cmd_eval(ctx, bl);
    }
    if (c_export->parsed()) {
      ctx.command = "export";
      return cmd_export(ctx, ex);
    }
    if (c_gradcheck->parsed()) {
      ctx.command = "gradcheck";
      return cmd_gradcheck(ctx, gc);
    }
  } catch (const ArgumentError & e) {
    err << "socprob " << ctx.command << ": error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError & e) {
    err << "socprob " << ctx.command << ": numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const DecodeError & e) {
    err << "socprob " << ctx.command << ": numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception & e) {
    err << "socprob " << ctx.command << ": error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

int run(int argc, const char * const * argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run(args, std::cout, std::cerr);
}

}  // namespace socprob::cli
