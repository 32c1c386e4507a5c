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

#include "socprob/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "socprob/error.hpp"
#include "socprob/parallel.hpp"
#include "socprob/random.hpp"

namespace socprob::train
{

namespace
{

std::string format_double(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string & key, const std::string & value)
{
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string & key, const std::string & value)
{
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string & key, const std::string & value)
{
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  throw ConfigError("invalid value for " + key + ": '" + value + "'");
}

std::string trim(const std::string & s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------- config

void TrainConfig::validate() const
{
  if (grid_width == 0 || grid_height == 0) {
    throw ConfigError("grid dimensions must be positive");
  }
  if (obs_len == 0 || pred_len == 0) {
    throw ConfigError("obs_len and pred_len must be positive");
  }
  if (batch_size == 0) {
    throw ConfigError("batch_size must be positive");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("lr must be finite and non-negative");
  }
  if (!(sigma_target > 0.0) || !(sigma_other > 0.0)) {
    throw ConfigError("sigmas must be positive");
  }
  if (channels.empty() || std::find(channels.begin(), channels.end(), 0u) != channels.end()) {
    throw ConfigError("channels must be a non-empty list of positive sizes");
  }
  if (kernel % 2 == 0) {
    throw ConfigError("kernel size must be odd");
  }
  if (!(clip_norm > 0.0)) {
    throw ConfigError("clip_norm must be positive");
  }
  if (sample_stride == 0) {
    throw ConfigError("sample_stride must be positive");
  }
}

nn::StackConfig TrainConfig::stack_config() const
{
  nn::StackConfig c;
  c.height = grid_height;
  c.width = grid_width;
  c.channels = channels;
  c.kernel = kernel;
  c.input_channels = 1;
  return c;
}

pmap::EncodeOptions TrainConfig::encode_options() const
{
  return {sigma_target, sigma_other, integrate_neighbors};
}

AdamConfig TrainConfig::adam_config() const { return {lr, beta1, beta2, eps}; }

KeyValues TrainConfig::to_key_values() const
{
  std::string ch;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    ch += (i ? "," : "") + std::to_string(channels[i]);
  }
  return {
    {"grid_width", std::to_string(grid_width)},
    {"grid_height", std::to_string(grid_height)},
    {"sigma_target", format_double(sigma_target)},
    {"sigma_other", format_double(sigma_other)},
    {"obs_len", std::to_string(obs_len)},
    {"pred_len", std::to_string(pred_len)},
    {"lr", format_double(lr)},
    {"beta1", format_double(beta1)},
    {"beta2", format_double(beta2)},
    {"eps", format_double(eps)},
    {"batch_size", std::to_string(batch_size)},
    {"epochs", std::to_string(epochs)},
    {"seed", std::to_string(seed)},
    {"integrate_neighbors", integrate_neighbors ? "true" : "false"},
    {"clip_norm", format_double(clip_norm)},
    {"channels", ch},
    {"kernel", std::to_string(kernel)},
    {"margin_frac", format_double(margin_frac)},
    {"augment_flip", augment_flip ? "true" : "false"},
    {"sample_stride", std::to_string(sample_stride)},
  };
}

void TrainConfig::set(const std::string & key, const std::string & value)
{
  if (key == "grid_width") {
    grid_width = parse_uint(key, value);
  } else if (key == "grid_height") {
    grid_height = parse_uint(key, value);
  } else if (key == "grid") {
    const auto x = value.find('x');
    if (x == std::string::npos) {
      throw ConfigError("grid must be WxH, got '" + value + "'");
    }
    grid_width = parse_uint(key, value.substr(0, x));
    grid_height = parse_uint(key, value.substr(x + 1));
  } else if (key == "sigma_target") {
    sigma_target = parse_double(key, value);
  } else if (key == "sigma_other") {
    sigma_other = parse_double(key, value);
  } else if (key == "obs_len") {
    obs_len = parse_uint(key, value);
  } else if (key == "pred_len") {
    pred_len = parse_uint(key, value);
  } else if (key == "lr") {
    lr = parse_double(key, value);
  } else if (key == "beta1") {
    beta1 = parse_double(key, value);
  } else if (key == "beta2") {
    beta2 = parse_double(key, value);
  } else if (key == "eps") {
    eps = parse_double(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_uint(key, value);
  } else if (key == "epochs") {
    epochs = parse_uint(key, value);
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "integrate_neighbors") {
    integrate_neighbors = parse_bool(key, value);
  } else if (key == "clip_norm") {
    clip_norm = parse_double(key, value);
  } else if (key == "channels") {
    channels.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      channels.push_back(parse_uint(key, trim(item)));
    }
  } else if (key == "kernel") {
    kernel = parse_uint(key, value);
  } else if (key == "margin_frac") {
    margin_frac = parse_double(key, value);
  } else if (key == "augment_flip") {
    augment_flip = parse_bool(key, value);
  } else if (key == "sample_stride") {
    sample_stride = parse_uint(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig read_config(std::istream & in, TrainConfig base)
{
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

// ---------------------------------------------------------------- loss

double l2_loss(const Tensor & pred, const Tensor & truth)
{
  require_same_shape(pred, truth, "l2_loss");
  if (pred.empty()) {
    throw DimensionError("l2_loss: empty maps");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

double l2_loss(const pmap::ProbMap & pred, const pmap::ProbMap & truth)
{
  if (!(pred.spec == truth.spec)) {
    throw DimensionError("l2_loss: maps use different grid specs");
  }
  return l2_loss(pred.grid, truth.grid);
}

// ---------------------------------------------------------------- samples

TrainingPair make_training_pair(
  const data::PredictionSample & sample, const TrainConfig & cfg, const pmap::GridSpec & spec)
{
  if (sample.obs_len() != cfg.obs_len || sample.pred_len() != cfg.pred_len) {
    throw ArgumentError("make_training_pair: sample window does not match obs_len/pred_len");
  }
  const auto options = cfg.encode_options();
  TrainingPair pair;
  const std::size_t total = sample.total_len();
  for (std::size_t t = 0; t + 1 < total; ++t) {
    pair.inputs.push_back(pmap::encode_frame(sample.positions_at(t), sample.target_id, spec, options));
  }
  for (const auto & p : sample.future) {
    pair.targets.push_back(
      pmap::gaussian_map(pmap::GaussianParams::isotropic(p, cfg.sigma_target), spec));
  }
  return pair;
}

std::vector<TrainingExample> prepare_examples(
  const std::vector<data::Scene> & scenes, const TrainConfig & cfg)
{
  std::vector<TrainingExample> out;
  for (std::size_t g = 0; g < scenes.size(); ++g) {
    if (scenes[g].empty()) {
      continue;
    }
    const auto spec = pmap::fit_grid(scenes[g], cfg.grid_width, cfg.grid_height, cfg.margin_frac);
    for (auto & s : data::build_samples(scenes[g], cfg.obs_len, cfg.pred_len, cfg.sample_stride)) {
      out.push_back({std::move(s), spec, g});
    }
  }
  return out;
}

namespace
{

std::vector<Tensor> input_tensors(const TrainingPair & pair)
{
  std::vector<Tensor> inputs;
  inputs.reserve(pair.inputs.size());
  for (const auto & m : pair.inputs) {
    inputs.push_back(m.grid);
  }
  return inputs;
}

void check_pair(const TrainingPair & pair, std::size_t obs_len)
{
  if (obs_len == 0 || pair.inputs.size() != obs_len - 1 + pair.targets.size()) {
    throw ArgumentError("training pair: expected obs_len + pred_len - 1 inputs");
  }
}

}  // namespace

SampleGradient sample_gradient(
  const nn::StackParams & params, const TrainingPair & pair, std::size_t obs_len)
{
  check_pair(pair, obs_len);
  const auto inputs = input_tensors(pair);
  nn::StackOutput fwd = nn::stack_forward(inputs, params, true);

  SampleGradient out;
  std::vector<Tensor> dy(inputs.size());
  for (std::size_t j = 0; j < pair.targets.size(); ++j) {
    const std::size_t t = obs_len - 1 + j;
    const Tensor & y = fwd.predictions[t];
    const Tensor & target = pair.targets[j].grid;
    out.loss += l2_loss(y, target);
    Tensor g = sub(y, target);
    dy[t] = scale(g, 2.0 / static_cast<double>(g.size()));
  }
  out.grads = nn::stack_backward(params, fwd.tape, dy);
  return out;
}

double sample_loss(const nn::StackParams & params, const TrainingPair & pair, std::size_t obs_len)
{
  check_pair(pair, obs_len);
  const auto inputs = input_tensors(pair);
  const nn::StackOutput fwd = nn::stack_forward(inputs, params, false);
  double loss = 0.0;
  for (std::size_t j = 0; j < pair.targets.size(); ++j) {
    loss += l2_loss(fwd.predictions[obs_len - 1 + j], pair.targets[j].grid);
  }
  return loss;
}

double clip_global_norm(nn::StackParams & grads, double max_norm)
{
  double sq = 0.0;
  grads.for_each([&](const std::string &, const Tensor & t) { sq += squared_norm(t); });
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    grads.for_each([&](const std::string &, Tensor & t) {
      for (auto & v : t.data()) {
        v *= s;
      }
    });
  }
  return norm;
}

void write_loss_log(const std::vector<LossRecord> & log, std::ostream & out)
{
  out << "epoch,mean_loss\n";
  char buf[64];
  for (const auto & r : log) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.mean_loss);
    out << r.epoch << "," << buf << "\n";
  }
}

// ---------------------------------------------------------------- training loop

namespace
{

std::vector<std::vector<std::size_t>> make_batches(
  const std::vector<TrainingExample> & examples, std::size_t batch_size, Rng & rng)
{
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    groups[examples[i].group].push_back(i);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (auto & [group, members] : groups) {
    shuffle(members, rng);
    for (std::size_t b = 0; b < members.size(); b += batch_size) {
      const std::size_t e = std::min(members.size(), b + batch_size);
      batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(b),
        members.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  shuffle(batches, rng);
  return batches;
}

std::string parameter_norms(const nn::StackParams & params)
{
  std::string out;
  params.for_each([&](const std::string & name, const Tensor & t) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), " %s=%.6g", name.c_str(), std::sqrt(squared_norm(t)));
    out += buf;
  });
  return out;
}

std::string rng_to_string(const Rng & rng)
{
  std::ostringstream ss;
  ss << rng;
  return ss.str();
}

}  // namespace

TrainResult train(
  const std::vector<TrainingExample> & examples, const TrainConfig & cfg,
  const TrainOptions & options)
{
  cfg.validate();
  if (examples.empty()) {
    throw ArgumentError("train: no training samples");
  }

  Rng rng(cfg.seed);
  TrainResult result;
  Checkpoint & ckpt = result.checkpoint;
  if (options.resume) {
    require_compatible(*options.resume, cfg);
    ckpt = *options.resume;
    std::istringstream ss(ckpt.rng_state);
    ss >> rng;
    if (!ss) {
      throw FormatError("checkpoint has an unreadable RNG state");
    }
  } else {
    ckpt.params = nn::StackParams::initialize(cfg.stack_config(), rng);
    for (const Tensor * t : nn::parameter_list(std::as_const(ckpt.params))) {
      ckpt.adam.push_back(AdamState::for_param(*t));
    }
    ckpt.epoch = 0;
  }
  ckpt.config = cfg;

  const auto names = nn::parameter_names(ckpt.params);
  const AdamConfig adam = cfg.adam_config();
  const std::size_t threads = resolve_threads(options.threads);

  for (std::size_t epoch = ckpt.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = make_batches(examples, cfg.batch_size, rng);
    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;

    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto & batch = batches[b];
      std::vector<std::pair<bool, bool>> flips(batch.size(), {false, false});
      if (cfg.augment_flip) {
        for (auto & f : flips) {
          f = {(rng() & 1u) != 0, (rng() & 1u) != 0};
        }
      }

      nn::StackParams total = nn::StackParams::zeros(cfg.stack_config());
      double batch_loss = 0.0;
      // Waves of `threads` samples; reduction always follows sample order.
      for (std::size_t w = 0; w < batch.size(); w += threads) {
        const std::size_t wave = std::min(threads, batch.size() - w);
        std::vector<SampleGradient> results(wave);
        parallel_for(wave, threads, [&](std::size_t k) {
          const TrainingExample & ex = examples[batch[w + k]];
          const auto [fx, fy] = flips[w + k];
          const pmap::GridSpec & spec = ex.spec;
          const WorldPoint center{
            spec.origin.x + 0.5 * static_cast<double>(spec.width) * spec.cell_size,
            spec.origin.y + 0.5 * static_cast<double>(spec.height) * spec.cell_size};
          const auto pair = make_training_pair(
            (fx || fy) ? data::flip_sample(ex.sample, fx, fy, center) : ex.sample, cfg, spec);
          results[k] = sample_gradient(ckpt.params, pair, cfg.obs_len);
        });
        for (auto & r : results) {
          batch_loss += r.loss;
          auto dst = nn::parameter_list(total);
          auto src = nn::parameter_list(std::as_const(r.grads));
          for (std::size_t i = 0; i < dst.size(); ++i) {
            axpy(1.0, *src[i], *dst[i]);
          }
        }
      }

      if (!std::isfinite(batch_loss)) {
        throw NumericError(
          "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
          "; parameter norms:" + parameter_norms(ckpt.params));
      }
      epoch_loss += batch_loss;
      epoch_count += batch.size();

      const double inv = 1.0 / static_cast<double>(batch.size());
      total.for_each([&](const std::string &, Tensor & t) {
        for (auto & v : t.data()) {
          v *= inv;
        }
      });
      clip_global_norm(total, cfg.clip_norm);

      auto params = nn::parameter_list(ckpt.params);
      auto grads = nn::parameter_list(std::as_const(total));
      for (std::size_t i = 0; i < params.size(); ++i) {
        adam_update(*params[i], *grads[i], ckpt.adam[i], adam, names[i]);
      }
    }

    const LossRecord record{epoch, epoch_loss / static_cast<double>(epoch_count)};
    result.log.push_back(record);
    ckpt.epoch = epoch;
    if (options.on_epoch) {
      options.on_epoch(record);
    }
  }
  ckpt.rng_state = rng_to_string(rng);
  round_to_storage_precision(ckpt);
  return result;
}

}  // namespace socprob::train
