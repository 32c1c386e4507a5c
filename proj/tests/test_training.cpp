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
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "socprob/error.hpp"
#include "socprob/gradcheck.hpp"
#include "socprob/training.hpp"

namespace socprob::train
{
namespace
{

TrainConfig tiny_config()
{
  TrainConfig c;
  c.grid_width = 8;
  c.grid_height = 8;
  c.channels = {2};
  c.batch_size = 2;
  c.epochs = 2;
  c.seed = 3;
  return c;
}

std::vector<TrainingExample> tiny_examples(const TrainConfig & cfg, std::size_t keep = 6)
{
  testing::SyntheticOptions o;
  o.pedestrians = 3;
  o.max_start = 4;
  o.min_length = 21;
  o.max_length = 22;
  auto ex = prepare_examples({testing::synthetic_scene(o)}, cfg);
  ex.resize(std::min(ex.size(), keep));
  return ex;
}

TEST(TrainConfig, DefaultsValidateAndMapToNetwork)
{
  const TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.grid_width, 100u);
  EXPECT_EQ(c.obs_len, 8u);
  EXPECT_EQ(c.pred_len, 12u);
  EXPECT_DOUBLE_EQ(c.sigma_target, 0.1);
  EXPECT_DOUBLE_EQ(c.sigma_other, 0.3);
  EXPECT_DOUBLE_EQ(c.clip_norm, 5.0);
  const nn::StackConfig s = c.stack_config();
  EXPECT_EQ(s.channels, (std::vector<std::size_t>{128, 64, 64, 32, 32}));
  EXPECT_EQ(s.input_channels, 1u);
}

TEST(TrainConfig, KeyValueRoundTrip)
{
  TrainConfig c = tiny_config();
  c.lr = 0.1 + 0.2;
  c.integrate_neighbors = false;
  c.channels = {5, 3, 1};
  TrainConfig back;
  for (const auto & [k, v] : c.to_key_values()) {
    back.set(k, v);
  }
  EXPECT_EQ(back, c);
}

TEST(TrainConfig, ReadConfigLayersAndRejectsBadInput)
{
  std::istringstream in("# comment\n\ngrid = 16x12\nlr=0.01\nchannels=4, 2\n");
  const TrainConfig c = read_config(in);
  EXPECT_EQ(c.grid_width, 16u);
  EXPECT_EQ(c.grid_height, 12u);
  EXPECT_DOUBLE_EQ(c.lr, 0.01);
  EXPECT_EQ(c.channels, (std::vector<std::size_t>{4, 2}));
  EXPECT_EQ(c.epochs, TrainConfig{}.epochs);

  std::istringstream unknown("colour=blue\n");
  EXPECT_THROW(read_config(unknown), ConfigError);
  std::istringstream no_eq("grid\n");
  EXPECT_THROW(read_config(no_eq), ConfigError);
  TrainConfig t;
  EXPECT_THROW(t.set("lr", "fast"), ConfigError);
  EXPECT_THROW(t.set("grid", "100"), ConfigError);
  EXPECT_THROW(t.set("integrate_neighbors", "maybe"), ConfigError);
}

TEST(TrainConfig, ValidateRejectsNonsense)
{
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(bad([](TrainConfig & c) { c.grid_width = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.obs_len = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.batch_size = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.lr = -1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.sigma_target = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.kernel = 4; }).validate(), ConfigError);
  EXPECT_THROW(bad([](TrainConfig & c) { c.channels = {}; }).validate(), ConfigError);
  EXPECT_NO_THROW(bad([](TrainConfig & c) { c.lr = 0; }).validate());
}

TEST(L2Loss, MeanSquaredDifference)
{
  const Tensor a({1, 2, 2}, std::vector<double>{0.0, 1.0, 0.5, 0.25});
  const Tensor b({1, 2, 2}, std::vector<double>{1.0, 1.0, 0.0, 0.25});
  EXPECT_DOUBLE_EQ(l2_loss(a, b), (1.0 + 0.25) / 4.0);
  EXPECT_EQ(l2_loss(a, a), 0.0);
  EXPECT_THROW(l2_loss(a, Tensor({1, 2, 3})), DimensionError);
}

TEST(MakeTrainingPair, TeacherForcedLayout)
{
  const TrainConfig cfg = tiny_config();
  const auto ex = tiny_examples(cfg, 1);
  ASSERT_EQ(ex.size(), 1u);
  const auto & s = ex[0].sample;
  const TrainingPair pair = make_training_pair(s, cfg, ex[0].spec);
  ASSERT_EQ(pair.inputs.size(), 19u);
  ASSERT_EQ(pair.targets.size(), 12u);
  for (std::size_t t = 0; t < 19; ++t) {
    EXPECT_EQ(pair.inputs[t],
      pmap::encode_frame(s.positions_at(t), s.target_id, ex[0].spec, cfg.encode_options()));
  }
  for (std::size_t j = 0; j < 12; ++j) {
    // Targets carry the target pedestrian only, with the narrow kernel.
    EXPECT_EQ(pair.targets[j],
      pmap::gaussian_map(pmap::GaussianParams::isotropic(s.future[j], 0.1), ex[0].spec));
  }
  TrainConfig other = cfg;
  other.pred_len = 10;
  EXPECT_THROW(make_training_pair(s, other, ex[0].spec), ArgumentError);
}

TEST(PrepareExamples, OneGridPerScene)
{
  const TrainConfig cfg = tiny_config();
  testing::SyntheticOptions a;
  a.seed = 1;
  testing::SyntheticOptions b;
  b.seed = 2;
  b.width_m = 30;
  const data::Scene sa = testing::synthetic_scene(a);
  const data::Scene sb = testing::synthetic_scene(b);
  const auto ex = prepare_examples({sa, sb}, cfg);
  const std::size_t na = data::build_samples(sa).size();
  const std::size_t nb = data::build_samples(sb).size();
  ASSERT_EQ(ex.size(), na + nb);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const std::size_t g = i < na ? 0 : 1;
    EXPECT_EQ(ex[i].group, g);
    EXPECT_EQ(ex[i].spec, pmap::fit_grid(g == 0 ? sa : sb, 8, 8, cfg.margin_frac));
  }
}

TEST(SampleGradient, LossSumsPredictionSteps)
{
  const TrainConfig cfg = tiny_config();
  const auto ex = tiny_examples(cfg, 1);
  const TrainingPair pair = make_training_pair(ex[0].sample, cfg, ex[0].spec);
  Rng rng(1);
  const auto params = nn::StackParams::initialize(cfg.stack_config(), rng);
  std::vector<Tensor> inputs;
  for (const auto & m : pair.inputs) {
    inputs.push_back(m.grid);
  }
  const auto fwd = nn::stack_forward(inputs, params, false);
  double expected = 0.0;
  for (std::size_t j = 0; j < 12; ++j) {
    const Tensor & y = fwd.predictions[7 + j];
    double sq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - pair.targets[j].grid[i];
      sq += d * d;
    }
    expected += sq / static_cast<double>(y.size());
  }
  const SampleGradient g = sample_gradient(params, pair, 8);
  EXPECT_NEAR(g.loss, expected, 1e-12);
  EXPECT_NEAR(sample_loss(params, pair, 8), expected, 1e-12);
  EXPECT_THROW(sample_loss(params, pair, 5), ArgumentError);
}

TEST(ClipGlobalNorm, ScalesOnlyAboveThreshold)
{
  nn::StackConfig sc;
  sc.height = 2;
  sc.width = 2;
  sc.channels = {1};
  nn::StackParams g = nn::StackParams::zeros(sc);
  g.head.bias[0] = 3.0;
  g.layers[0].b_i[0] = 4.0;
  nn::StackParams small = g;
  EXPECT_DOUBLE_EQ(clip_global_norm(small, 10.0), 5.0);
  EXPECT_EQ(small, g);
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.head.bias[0], 0.6, 1e-15);
  EXPECT_NEAR(g.layers[0].b_i[0], 0.8, 1e-15);
}

TEST(GradientCheck, TinyNetworkAgreesWithFiniteDifferences)
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GradCheckReport r = tiny_gradient_check(seed);
    EXPECT_TRUE(r.passed(1e-4)) << "seed " << seed << " max rel error " << r.max_rel_error;
    EXPECT_EQ(r.entries.size(), 17u);
  }
}

TEST(Train, ZeroLearningRateKeepsInitialWeights)
{
  TrainConfig cfg = tiny_config();
  cfg.lr = 0.0;
  const auto result = train(tiny_examples(cfg), cfg);
  Checkpoint expected;
  Rng rng(cfg.seed);
  expected.params = nn::StackParams::initialize(cfg.stack_config(), rng);
  expected.adam = result.checkpoint.adam;
  round_to_storage_precision(expected);
  EXPECT_EQ(result.checkpoint.params, expected.params);
  EXPECT_EQ(result.log.size(), 2u);
}

TEST(Train, DeterministicAcrossRunsAndThreadCounts)
{
  const TrainConfig cfg = tiny_config();
  const auto ex = tiny_examples(cfg);
  const auto a = train(ex, cfg);
  const auto b = train(ex, cfg);
  const auto c = train(ex, cfg, {3, nullptr, {}});
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  EXPECT_EQ(a.checkpoint, c.checkpoint);
  ASSERT_EQ(a.log.size(), c.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].mean_loss, c.log[i].mean_loss);
  }
  TrainConfig other = cfg;
  other.seed = 4;
  EXPECT_NE(train(ex, other).checkpoint.params, a.checkpoint.params);
}

TEST(Train, ResumeContinuesEpochCount)
{
  TrainConfig cfg = tiny_config();
  const auto ex = tiny_examples(cfg);
  const auto first = train(ex, cfg);
  EXPECT_EQ(first.checkpoint.epoch, 2u);
  EXPECT_FALSE(first.checkpoint.rng_state.empty());
  cfg.epochs = 4;
  const auto resumed = train(ex, cfg, {1, &first.checkpoint, {}});
  ASSERT_EQ(resumed.log.size(), 2u);
  EXPECT_EQ(resumed.log[0].epoch, 3u);
  EXPECT_EQ(resumed.checkpoint.epoch, 4u);
  const auto direct = train(ex, cfg);
  // Resumed state is float-rounded: close, not bitwise.
  EXPECT_NEAR(resumed.log[1].mean_loss, direct.log[3].mean_loss,
    1e-4 * direct.log[3].mean_loss);
  for (std::size_t i = 0; i < resumed.checkpoint.adam.size(); ++i) {
    EXPECT_EQ(resumed.checkpoint.adam[i].step_count, direct.checkpoint.adam[i].step_count);
  }

  TrainConfig wider = cfg;
  wider.channels = {3};
  EXPECT_THROW(train(ex, wider, {1, &first.checkpoint, {}}), DimensionError);
}

TEST(Train, LossDecreasesOnSmallSet)
{
  TrainConfig cfg = tiny_config();
  cfg.lr = 0.01;
  cfg.batch_size = 1;
  cfg.epochs = 8;
  const auto result = train(tiny_examples(cfg, 4), cfg);
  EXPECT_LT(result.log.back().mean_loss, 0.5 * result.log.front().mean_loss);
}

TEST(Train, RejectsEmptyAndNonFinite)
{
  const TrainConfig cfg = tiny_config();
  EXPECT_THROW(train({}, cfg), ArgumentError);
  auto ex = tiny_examples(cfg, 1);
  TrainResult start = train(ex, cfg);
  start.checkpoint.epoch = 0;
  start.checkpoint.params.head.bias[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(ex, cfg, {1, &start.checkpoint, {}}), NumericError);
  ex[0].sample.observed[3].x = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(train(ex, cfg), ArgumentError);
}

TEST(LossLog, CsvFormat)
{
  std::ostringstream out;
  write_loss_log({{1, 0.5}, {2, 0.25}}, out);
  EXPECT_EQ(out.str(), "epoch,mean_loss\n1,0.5\n2,0.25\n");
}

}  // namespace
}  // namespace socprob::train
