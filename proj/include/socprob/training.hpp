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

#ifndef SOCPROB__TRAINING_HPP_
#define SOCPROB__TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "socprob/adam.hpp"
#include "socprob/convlstm.hpp"
#include "socprob/prob_map.hpp"
#include "socprob/trajectory_data.hpp"

namespace socprob::train
{

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct TrainConfig
{
  std::size_t grid_width = 100;
  std::size_t grid_height = 100;
  double sigma_target = 0.1;
  double sigma_other = 0.3;
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  bool integrate_neighbors = true;
  double clip_norm = 5.0;
  std::vector<std::size_t> channels{128, 64, 64, 32, 32};
  std::size_t kernel = 3;
  double margin_frac = 0.05;
  bool augment_flip = false;
  std::size_t sample_stride = 1;

  /// Throws ConfigError on non-positive lengths, lr <= 0 is allowed only as 0.
  void validate() const;

  nn::StackConfig stack_config() const;
  pmap::EncodeOptions encode_options() const;
  AdamConfig adam_config() const;

  /// Canonical key=value form; doubles use round-trip precision.
  KeyValues to_key_values() const;
  /// Applies one key. Unknown key or unparsable value -> ConfigError.
  void set(const std::string & key, const std::string & value);

  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

/// Reads `key=value` lines ('#' comments allowed) on top of `base`.
TrainConfig read_config(std::istream & in, TrainConfig base = {});

/// Mean over cells of the squared difference. Maps must share a GridSpec.
double l2_loss(const pmap::ProbMap & pred, const pmap::ProbMap & truth);
double l2_loss(const Tensor & pred, const Tensor & truth);

/**
 * @brief Teacher-forced inputs and supervision targets for one sample.
 *
 * inputs[t], t < obs_len + pred_len - 1: every pedestrian present at window
 * step t, the sample's target drawn with sigma_target.
 * targets[j], j < pred_len: the target alone at future step j, the position
 * the model must produce after consuming inputs[obs_len - 1 + j].
 */
struct TrainingPair
{
  std::vector<pmap::ProbMap> inputs;
  std::vector<pmap::ProbMap> targets;
};

TrainingPair make_training_pair(const data::PredictionSample & sample, const TrainConfig & cfg,
  const pmap::GridSpec & spec);

/// A sample bound to the grid of the scene it came from.
struct TrainingExample
{
  data::PredictionSample sample;
  pmap::GridSpec spec;
  std::size_t group = 0;  // examples sharing a group share `spec`
};

/// Fits one grid per scene and windows every scene into samples.
std::vector<TrainingExample> prepare_examples(const std::vector<data::Scene> & scenes,
  const TrainConfig & cfg);

struct SampleGradient
{
  double loss = 0.0;
  nn::StackParams grads;
};

/// Forward, summed per-step loss over the prediction steps, and BPTT.
SampleGradient sample_gradient(const nn::StackParams & params, const TrainingPair & pair,
  std::size_t obs_len);
/// Loss only, same definition as sample_gradient.
double sample_loss(const nn::StackParams & params, const TrainingPair & pair, std::size_t obs_len);

/// Scales all gradients so their global L2 norm is at most max_norm. Returns the pre-clip norm.
double clip_global_norm(nn::StackParams & grads, double max_norm);

struct Checkpoint
{
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  TrainConfig config;
  nn::StackParams params;
  std::vector<AdamState> adam;  // one per tensor of `params`, same order
  std::uint64_t epoch = 0;
  std::string rng_state;

  friend bool operator==(const Checkpoint &, const Checkpoint &) = default;
};

/// Rounds every tensor value to float32, the checkpoint storage precision.
void round_to_storage_precision(Checkpoint & ckpt);

void save_checkpoint(const std::string & path, const Checkpoint & ckpt);
/// FormatError on bad magic or header, VersionError on version mismatch,
/// IoError on unreadable or truncated files.
Checkpoint load_checkpoint(const std::string & path);
/// DimensionError unless the checkpoint's network matches `cfg`'s grid and channels.
void require_compatible(const Checkpoint & ckpt, const TrainConfig & cfg);

struct LossRecord
{
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};

void write_loss_log(const std::vector<LossRecord> & log, std::ostream & out);

struct TrainOptions
{
  std::size_t threads = 1;
  const Checkpoint * resume = nullptr;
  std::function<void(const LossRecord &)> on_epoch;
};

struct TrainResult
{
  Checkpoint checkpoint;
  std::vector<LossRecord> log;
};

/**
 * @brief Mini-batch Adam on the summed per-step L2 loss.
 *
 * Batches never mix grids. Per-sample gradients are summed in sample order
 * regardless of thread count, then averaged, clipped, and applied.
 * NumericError on a non-finite loss, with epoch, batch and parameter norms.
 */
TrainResult train(const std::vector<TrainingExample> & examples, const TrainConfig & cfg,
  const TrainOptions & options = {});

}  // namespace socprob::train

#endif  // SOCPROB__TRAINING_HPP_
