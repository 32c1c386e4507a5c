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

#ifndef SOCPROB__EVALUATION_HPP_
#define SOCPROB__EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "socprob/convlstm.hpp"
#include "socprob/geometry.hpp"
#include "socprob/prob_map.hpp"
#include "socprob/random.hpp"
#include "socprob/training.hpp"
#include "socprob/trajectory_data.hpp"

namespace socprob::eval
{

struct MetricReport
{
  std::string dataset;
  double ade = 0.0;  // meters
  double fde = 0.0;  // meters, final step only
  double min_fde = 0.0;  // best final-step error among the k candidates
  std::size_t num_pedestrians = 0;
  std::size_t num_samples_k = 1;
  std::uint64_t seed = 0;
};

/// Mean Euclidean error over pedestrians and steps. DimensionError on shape mismatch.
double ade(const std::vector<Path> & pred, const std::vector<Path> & truth);
/// Mean Euclidean error at the last step. DimensionError on shape mismatch.
double fde(const std::vector<Path> & pred, const std::vector<Path> & truth);

enum class DecodeMode { sample, argmax };
enum class RolloutMode { joint, frozen };

/// Replaces map decoding: (predicted map, pedestrian, future step, rng) -> position.
using Decoder =
  std::function<WorldPoint(const pmap::ProbMap &, PedestrianId, std::size_t, Rng &)>;

struct RolloutOptions
{
  DecodeMode decode = DecodeMode::sample;
  RolloutMode mode = RolloutMode::joint;
  pmap::EncodeOptions encode;
  std::size_t pred_len = 12;
  Decoder decoder;  // optional override of `decode`
};

struct RolloutResult
{
  std::map<PedestrianId, Path> predicted;  // pred_len points per rolled-out pedestrian
  std::size_t decode_failures = 0;
};

/**
 * @brief Autoregressive prediction for a sample's target and its neighbors.
 *
 * Every pedestrian present at the last observed step gets its own network
 * state (shared weights), warmed up on the observed frames. Each future step
 * decodes every rolled-out pedestrian from its own map, then re-encodes all
 * decoded positions into each pedestrian's next input. Neighbors who left
 * during observation stay at their last observed position. In frozen mode
 * only the target is rolled out and every neighbor stays where it was last
 * observed. An undecodable map repeats the previous position.
 */
RolloutResult rollout(const nn::StackParams & params, const data::PredictionSample & sample,
  const pmap::GridSpec & spec, const RolloutOptions & options, Rng & rng);

struct Selection
{
  std::size_t index = 0;  // candidate with the lowest ADE, first on ties
  double ade = 0.0;
  double fde = 0.0;       // of the selected candidate
  double min_fde = 0.0;   // over all candidates
};

/// Scores target-path candidates against the truth. ArgumentError when empty.
Selection select_best(const std::vector<Path> & candidates, const Path & truth);

struct BestOfK
{
  std::vector<Path> candidates;  // k target paths
  Selection selection;
};

/// k sampled rollouts of the target scored by min-ADE. ArgumentError if k == 0.
BestOfK best_of_k(const nn::StackParams & params, const data::PredictionSample & sample,
  const pmap::GridSpec & spec, const RolloutOptions & options, std::size_t k, Rng & rng);

/// Least-squares line per axis over the observed steps, extrapolated. Needs >= 2 points.
Path linear_baseline(const Path & observed, std::size_t pred_len = 12);
/// Repeats the last observed point. Needs >= 1 point.
Path stationary_baseline(const Path & observed, std::size_t pred_len = 12);

/// Candidate target paths for one sample.
using Predictor =
  std::function<std::vector<Path>(const data::PredictionSample &, const pmap::GridSpec &, Rng &)>;
/// Builds a predictor for one leave-one-out split (e.g. by training on split.train).
using PredictorFactory =
  std::function<Predictor(const data::Split & split, const std::string & held_out)>;

Predictor linear_predictor(std::size_t pred_len = 12);
Predictor stationary_predictor(std::size_t pred_len = 12);
/// k sampled (or one argmax) rollouts with shared parameters.
Predictor model_predictor(std::shared_ptr<const nn::StackParams> params,
  RolloutOptions options, std::size_t k);

struct BenchmarkOptions
{
  std::size_t obs_len = 8;
  std::size_t pred_len = 12;
  std::size_t sample_stride = 1;
  std::size_t grid_width = 100;
  std::size_t grid_height = 100;
  double margin_frac = 0.05;
  std::size_t k = 1;  // reported in the metrics rows
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t max_samples = 0;  // per held-out scene, 0 = all
};

/// Windows and grid used to score one scene.
struct EvalSet
{
  std::vector<data::PredictionSample> samples;
  pmap::GridSpec spec;
};

EvalSet make_eval_set(const data::Scene & scene, const BenchmarkOptions & options);

/// Scores one predictor on a prepared set; sample i draws from derive_seed(seed, i).
MetricReport evaluate(const EvalSet & set, const Predictor & predictor,
  const BenchmarkOptions & options, const std::string & name);

/**
 * @brief Leave-one-out scores, one row per held-out scene plus "AVG".
 *
 * AVG is the unweighted mean of the per-scene rows and is appended when more
 * than one scene is held out. ConfigError for an unknown held-out name.
 */
std::vector<MetricReport> run_benchmark(const std::vector<data::Scene> & scenes,
  const std::vector<std::string> & held_out, const PredictorFactory & factory,
  const BenchmarkOptions & options);

enum class AblationKind { integration, map_size };

/// Number of checkpoints a sweep expects: 2 (on/off) or 4 (80, 100, 150, 200).
std::size_t ablation_size(AblationKind kind);

struct AblationRow
{
  std::string kind;     // "integration" or "map_size"
  std::string setting;  // "on"/"off" or "WxH"
  std::string checkpoint;
  MetricReport report;
};

/**
 * @brief Evaluates one trained checkpoint per configuration on `held_out`.
 *
 * Grid size and integration come from each checkpoint's own config.
 * ConfigError for a missing checkpoint or a wrong checkpoint count.
 */
std::vector<AblationRow> ablation_sweep(AblationKind kind,
  const std::vector<std::string> & checkpoints, const std::vector<data::Scene> & scenes,
  const std::string & held_out, const BenchmarkOptions & options, DecodeMode decode);

struct SamplingErrorRow
{
  std::size_t grid_size = 0;
  double cell_size = 0.0;
  double mean_error = 0.0;  // mean best-of-k ADE of decoded ground-truth maps
  std::size_t num_samples = 0;
};

/**
 * @brief Decode error of ground-truth maps alone, per square grid size.
 *
 * Each future position of every sample's target is drawn as a sigma_target
 * Gaussian on the scene's grid; k decoded trajectories are scored by min-ADE.
 */
std::vector<SamplingErrorRow> sampling_error_sweep(const data::Scene & scene,
  const std::vector<std::size_t> & sizes, std::size_t k, std::uint64_t seed,
  const BenchmarkOptions & options, double sigma_target = 0.1);

void write_metrics_csv(const std::vector<MetricReport> & rows, std::ostream & out);
void write_ablation_csv(const std::vector<AblationRow> & rows, std::ostream & out);
void write_sampling_error_csv(const std::vector<SamplingErrorRow> & rows, std::ostream & out);
/// Rows `ped_id,step,kind,x,y` with kind obs, gt or pred; step counts from the window start.
void write_overlay_csv(const data::PredictionSample & sample,
  const std::map<PedestrianId, Path> & predicted, std::ostream & out);

}  // namespace socprob::eval

#endif  // SOCPROB__EVALUATION_HPP_
