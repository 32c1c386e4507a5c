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
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "socprob/error.hpp"
#include "socprob/evaluation.hpp"

namespace socprob::eval
{
namespace
{

Path random_path(std::size_t n, Rng & rng)
{
  Path p;
  for (std::size_t i = 0; i < n; ++i) {
    p.push_back({uniform(rng, -5, 5), uniform(rng, -5, 5)});
  }
  return p;
}

data::Scene small_scene(const std::string & name, std::uint64_t seed, std::size_t peds = 3)
{
  testing::SyntheticOptions o;
  o.name = name;
  o.seed = seed;
  o.pedestrians = peds;
  o.max_start = 4;
  o.min_length = 21;
  o.max_length = 24;
  return testing::synthetic_scene(o);
}

struct Fixture
{
  data::PredictionSample sample;
  pmap::GridSpec spec;
  nn::StackParams params;
};

// A sample with a target and neighbors, plus a small random network on its grid.
Fixture make_fixture(std::uint64_t seed = 1)
{
  data::Scene scene;
  scene.name = "fixture";
  scene.trajectories.push_back(testing::straight_walker(1, 0, 20, {0, 0}, {0.4, 0.1}));
  scene.trajectories.push_back(testing::straight_walker(2, 0, 20, {0, 4}, {0.4, -0.1}));
  scene.trajectories.push_back(testing::straight_walker(3, 0, 5, {6, 2}, {0.0, 0.1}));
  scene.trajectories.push_back(testing::straight_walker(4, 0, 14, {8, 0}, {-0.2, 0.2}));
  Fixture f;
  const auto samples = data::build_samples(scene);
  f.sample = samples.front();
  EXPECT_EQ(f.sample.target_id, 1);
  f.spec = pmap::fit_grid(scene, 12, 12);
  nn::StackConfig cfg;
  cfg.height = 12;
  cfg.width = 12;
  cfg.channels = {2};
  Rng rng(seed);
  f.params = nn::StackParams::initialize(cfg, rng);
  return f;
}

TEST(Metrics, KnownValues)
{
  const std::vector<Path> pred{{{0, 0}, {3, 4}}};
  const std::vector<Path> truth{{{0, 0}, {0, 0}}};
  EXPECT_DOUBLE_EQ(ade(pred, truth), 2.5);
  EXPECT_DOUBLE_EQ(fde(pred, truth), 5.0);
  EXPECT_EQ(ade(truth, truth), 0.0);
}

TEST(Metrics, MatchOracleOnRandomPaths)
{
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 5);
    const std::size_t len = 1 + uniform_index(rng, 12);
    std::vector<Path> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(random_path(len, rng));
      b.push_back(random_path(len, rng));
    }
    EXPECT_NEAR(ade(a, b), oracle::ade(a, b), 1e-12);
    EXPECT_NEAR(fde(a, b), oracle::fde(a, b), 1e-12);
    EXPECT_NEAR(ade(a, b), ade(b, a), 1e-12);
  }
}

TEST(Metrics, ShapeMismatchIsDimensionError)
{
  Rng rng(1);
  const std::vector<Path> a{random_path(3, rng)};
  const std::vector<Path> b{random_path(4, rng)};
  EXPECT_THROW(ade(a, b), DimensionError);
  EXPECT_THROW(fde(a, std::vector<Path>{}), DimensionError);
  EXPECT_THROW(ade(std::vector<Path>{}, std::vector<Path>{}), DimensionError);
}

TEST(SelectBest, LowestAdeFirstOnTiesAndMinFde)
{
  const Path truth{{0, 0}, {0, 0}};
  const std::vector<Path> cands{
    {{2, 0}, {2, 0}}, {{0, 0}, {1, 0}}, {{1, 0}, {0, 0}}, {{0, 0}, {3, 0}}};
  const Selection s = select_best(cands, truth);
  EXPECT_EQ(s.index, 1u);
  EXPECT_DOUBLE_EQ(s.ade, 0.5);
  EXPECT_DOUBLE_EQ(s.fde, 1.0);
  EXPECT_DOUBLE_EQ(s.min_fde, 0.0);
  EXPECT_THROW(select_best({}, truth), ArgumentError);
}

TEST(Baselines, LinearMatchesNormalEquations)
{
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Path obs = random_path(2 + uniform_index(rng, 8), rng);
    std::vector<double> xs, ys;
    for (const auto & p : obs) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    const auto [ax, bx] = oracle::least_squares_line(xs);
    const auto [ay, by] = oracle::least_squares_line(ys);
    const Path pred = linear_baseline(obs, 12);
    ASSERT_EQ(pred.size(), 12u);
    for (std::size_t j = 0; j < 12; ++j) {
      const double t = static_cast<double>(obs.size() + j);
      EXPECT_NEAR(pred[j].x, ax + bx * t, 1e-9);
      EXPECT_NEAR(pred[j].y, ay + by * t, 1e-9);
    }
  }
}

TEST(Baselines, LinearIsExactOnConstantVelocity)
{
  const auto walker = testing::straight_walker(1, 0, 20, {1, 2}, {0.3, -0.2});
  Path obs, future;
  for (std::size_t i = 0; i < 20; ++i) {
    (i < 8 ? obs : future).push_back(walker.points[i].position());
  }
  EXPECT_NEAR(ade({linear_baseline(obs)}, {future}), 0.0, 1e-12);
  EXPECT_THROW(linear_baseline({{0, 0}}), ArgumentError);
}

TEST(Baselines, StationaryRepeatsLastPoint)
{
  const Path p = stationary_baseline({{0, 0}, {1, 2}}, 3);
  EXPECT_EQ(p, (Path{{1, 2}, {1, 2}, {1, 2}}));
  EXPECT_THROW(stationary_baseline({}, 3), ArgumentError);
}

TEST(Rollout, OracleDecoderReproducesGroundTruth)
{
  const Fixture f = make_fixture();
  RolloutOptions opts;
  opts.decoder = [&](const pmap::ProbMap & map, PedestrianId id, std::size_t step, Rng &) {
    if (id == f.sample.target_id) {
      return f.sample.future[step];
    }
    const auto & path = f.sample.neighbor_future.at(id);
    return path[step] ? *path[step] : pmap::argmax_decode(map);
  };
  Rng rng(1);
  const RolloutResult r = rollout(f.params, f.sample, f.spec, opts, rng);
  EXPECT_EQ(r.decode_failures, 0u);
  EXPECT_EQ(ade({r.predicted.at(1)}, {f.sample.future}), 0.0);
  EXPECT_EQ(fde({r.predicted.at(1)}, {f.sample.future}), 0.0);
}

TEST(Rollout, JointRollsOutPresentNeighborsFrozenOnlyTarget)
{
  const Fixture f = make_fixture();
  Rng rng(2);
  RolloutOptions joint;
  const RolloutResult j = rollout(f.params, f.sample, f.spec, joint, rng);
  // Pedestrian 3 leaves before the last observed step.
  EXPECT_EQ(j.predicted.size(), 3u);
  EXPECT_EQ(j.predicted.count(3), 0u);
  for (const auto & [id, path] : j.predicted) {
    EXPECT_EQ(path.size(), 12u);
  }
  RolloutOptions frozen;
  frozen.mode = RolloutMode::frozen;
  const RolloutResult fr = rollout(f.params, f.sample, f.spec, frozen, rng);
  EXPECT_EQ(fr.predicted.size(), 1u);
  EXPECT_EQ(fr.predicted.count(1), 1u);
}

TEST(Rollout, SampledPositionsStayOnGrid)
{
  const Fixture f = make_fixture();
  Rng rng(3);
  const RolloutResult r = rollout(f.params, f.sample, f.spec, {}, rng);
  for (const auto & [id, path] : r.predicted) {
    for (const auto & p : path) {
      EXPECT_TRUE(f.spec.contains(f.spec.world_to_grid(p)));
    }
  }
}

TEST(Rollout, ArgmaxIsDeterministicAndSamplingIsSeeded)
{
  const Fixture f = make_fixture();
  RolloutOptions arg;
  arg.decode = DecodeMode::argmax;
  Rng a(1);
  Rng b(99);
  EXPECT_EQ(rollout(f.params, f.sample, f.spec, arg, a).predicted,
    rollout(f.params, f.sample, f.spec, arg, b).predicted);
  Rng c(5);
  Rng d(5);
  EXPECT_EQ(rollout(f.params, f.sample, f.spec, {}, c).predicted,
    rollout(f.params, f.sample, f.spec, {}, d).predicted);
}

TEST(Rollout, EmptyMapsFallBackToLastPosition)
{
  Fixture f = make_fixture();
  f.params.head.bias[0] = -1e4;
  f.params.head.weight.fill(0.0);
  for (DecodeMode mode : {DecodeMode::sample, DecodeMode::argmax}) {
    RolloutOptions opts;
    opts.decode = mode;
    Rng rng(1);
    const RolloutResult r = rollout(f.params, f.sample, f.spec, opts, rng);
    EXPECT_EQ(r.decode_failures, 12u * r.predicted.size());
    for (const auto & p : r.predicted.at(1)) {
      EXPECT_EQ(p, f.sample.observed.back());
    }
  }
}

TEST(Rollout, GridMismatchIsDimensionError)
{
  const Fixture f = make_fixture();
  pmap::GridSpec other = f.spec;
  other.width = 13;
  Rng rng(1);
  EXPECT_THROW(rollout(f.params, f.sample, other, {}, rng), DimensionError);
}

TEST(BestOfK, CandidatesExtendAndSelectionImproves)
{
  const Fixture f = make_fixture();
  Rng r1(7);
  const BestOfK three = best_of_k(f.params, f.sample, f.spec, {}, 3, r1);
  Rng r2(7);
  const BestOfK eight = best_of_k(f.params, f.sample, f.spec, {}, 8, r2);
  ASSERT_EQ(three.candidates.size(), 3u);
  ASSERT_EQ(eight.candidates.size(), 8u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(three.candidates[i], eight.candidates[i]);
  }
  EXPECT_LE(eight.selection.ade, three.selection.ade);
  for (const auto & c : eight.candidates) {
    EXPECT_LE(eight.selection.ade, ade({c}, {f.sample.future}));
  }
  Rng r3(7);
  EXPECT_EQ(rollout(f.params, f.sample, f.spec, {}, r3).predicted.at(1), eight.candidates[0]);
  Rng r4(7);
  EXPECT_THROW(best_of_k(f.params, f.sample, f.spec, {}, 0, r4), ArgumentError);
}

TEST(Evaluate, StationaryMatchesOracleAverage)
{
  const data::Scene scene = small_scene("s", 3);
  BenchmarkOptions o;
  o.grid_width = 10;
  o.grid_height = 10;
  const EvalSet set = make_eval_set(scene, o);
  ASSERT_FALSE(set.samples.empty());
  double a = 0.0;
  double f = 0.0;
  for (const auto & s : set.samples) {
    const std::vector<Path> p{stationary_baseline(s.observed)};
    a += oracle::ade(p, {s.future});
    f += oracle::fde(p, {s.future});
  }
  const MetricReport r = evaluate(set, stationary_predictor(), o, "s");
  EXPECT_NEAR(r.ade, a / static_cast<double>(set.samples.size()), 1e-12);
  EXPECT_NEAR(r.fde, f / static_cast<double>(set.samples.size()), 1e-12);
  EXPECT_EQ(r.num_pedestrians, set.samples.size());
  EXPECT_EQ(r.dataset, "s");
}

TEST(Evaluate, ThreadCountDoesNotChangeResults)
{
  const data::Scene scene = small_scene("s", 4);
  const Fixture f = make_fixture();
  BenchmarkOptions o;
  o.grid_width = 12;
  o.grid_height = 12;
  o.k = 3;
  o.max_samples = 4;
  const EvalSet set = make_eval_set(scene, o);
  const auto pred = model_predictor(std::make_shared<nn::StackParams>(f.params), {}, 3);
  const MetricReport one = evaluate(set, pred, o, "s");
  o.threads = 3;
  const MetricReport three = evaluate(set, pred, o, "s");
  EXPECT_EQ(one.ade, three.ade);
  EXPECT_EQ(one.fde, three.fde);
  EXPECT_EQ(one.min_fde, three.min_fde);
}

TEST(Evaluate, SubsetIsEvenlySpacedAndEmptyIsDataError)
{
  const data::Scene scene = small_scene("s", 5, 4);
  BenchmarkOptions o;
  o.grid_width = 8;
  o.grid_height = 8;
  const auto all = make_eval_set(scene, o).samples;
  o.max_samples = 3;
  const auto some = make_eval_set(scene, o).samples;
  ASSERT_EQ(some.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(some[i].anchor_frame, all[i * all.size() / 3].anchor_frame);
  }
  data::Scene short_scene;
  short_scene.name = "short";
  short_scene.trajectories.push_back(testing::straight_walker(1, 0, 10, {0, 0}, {1, 0}));
  EXPECT_THROW(evaluate(make_eval_set(short_scene, o), linear_predictor(), o, "short"), DataError);
}

std::vector<data::Scene> benchmark_scenes()
{
  std::vector<data::Scene> out;
  std::uint64_t seed = 10;
  for (const auto & n : data::benchmark_scene_names()) {
    out.push_back(small_scene(n, seed++));
  }
  return out;
}

TEST(RunBenchmark, AverageRowIsUnweightedMean)
{
  const auto scenes = benchmark_scenes();
  BenchmarkOptions o;
  o.grid_width = 8;
  o.grid_height = 8;
  const PredictorFactory factory = [&](const data::Split & split, const std::string & name) {
    for (const auto & s : split.train) {
      EXPECT_NE(s.name, name);
    }
    return linear_predictor();
  };
  const auto rows = run_benchmark(scenes, {"eth", "hotel", "zara1"}, factory, o);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[3].dataset, "AVG");
  EXPECT_NEAR(rows[3].ade, (rows[0].ade + rows[1].ade + rows[2].ade) / 3.0, 1e-12);
  EXPECT_NEAR(rows[3].fde, (rows[0].fde + rows[1].fde + rows[2].fde) / 3.0, 1e-12);
  EXPECT_EQ(run_benchmark(scenes, {"univ"}, factory, o).size(), 1u);
  EXPECT_THROW(run_benchmark(scenes, {"mall"}, factory, o), ConfigError);
}

TEST(SamplingErrorSweep, RowsPerSizeAndMoreCandidatesNeverHurt)
{
  const data::Scene scene = small_scene("s", 6);
  BenchmarkOptions o;
  o.max_samples = 6;
  const auto one = sampling_error_sweep(scene, {20, 40, 80}, 1, 3, o);
  const auto many = sampling_error_sweep(scene, {20, 40, 80}, 10, 3, o);
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].grid_size, 20u);
  EXPECT_GT(one[0].cell_size, one[1].cell_size);
  EXPECT_GT(one[1].cell_size, one[2].cell_size);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(one[i].num_samples, 6u);
    EXPECT_GT(one[i].mean_error, 0.0);
    EXPECT_LE(many[i].mean_error, one[i].mean_error);
  }
  EXPECT_EQ(sampling_error_sweep(scene, {40}, 10, 3, o)[0].mean_error, many[1].mean_error);
  EXPECT_THROW(sampling_error_sweep(scene, {40}, 0, 3, o), ArgumentError);
}

TEST(AblationSweep, ValidatesInputsAndReadsSettingsFromCheckpoints)
{
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "socprob_ablation_test";
  fs::create_directories(dir);
  const auto scenes = benchmark_scenes();
  BenchmarkOptions o;
  o.max_samples = 2;
  EXPECT_THROW(ablation_sweep(AblationKind::integration, {"a"}, scenes, "eth", o,
                 DecodeMode::argmax),
    ConfigError);
  EXPECT_THROW(ablation_sweep(AblationKind::integration,
                 {(dir / "x").string(), (dir / "y").string()}, scenes, "eth", o,
                 DecodeMode::argmax),
    ConfigError);

  std::vector<std::string> paths;
  for (bool on : {true, false}) {
    train::Checkpoint ckpt;
    ckpt.config.grid_width = 9;
    ckpt.config.grid_height = 7;
    ckpt.config.channels = {2};
    ckpt.config.integrate_neighbors = on;
    Rng rng(1);
    ckpt.params = nn::StackParams::initialize(ckpt.config.stack_config(), rng);
    for (const Tensor * t : nn::parameter_list(std::as_const(ckpt.params))) {
      ckpt.adam.push_back(AdamState::for_param(*t));
    }
    paths.push_back((dir / (on ? "on.ckpt" : "off.ckpt")).string());
    train::save_checkpoint(paths.back(), ckpt);
  }
  const auto rows =
    ablation_sweep(AblationKind::integration, paths, scenes, "eth", o, DecodeMode::argmax);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].setting, "on");
  EXPECT_EQ(rows[1].setting, "off");
  EXPECT_EQ(rows[0].report.dataset, "eth");
  EXPECT_EQ(rows[0].report.num_pedestrians, 2u);
  EXPECT_EQ(ablation_size(AblationKind::map_size), 4u);
  fs::remove_all(dir);
}

TEST(CsvWriters, Formats)
{
  MetricReport r;
  r.dataset = "eth";
  r.ade = 0.5;
  r.fde = 1.25;
  r.num_samples_k = 20;
  r.seed = 7;
  std::ostringstream m;
  write_metrics_csv({r}, m);
  EXPECT_EQ(m.str(), "scene,ade,fde,k,seed\neth,0.500000,1.250000,20,7\n");

  std::ostringstream a;
  write_ablation_csv({{"map_size", "80x80", "c.ckpt", r}}, a);
  EXPECT_EQ(a.str(),
    "kind,setting,checkpoint,scene,ade,fde,k,seed\nmap_size,80x80,c.ckpt,eth,0.500000,1.250000,"
    "20,7\n");

  std::ostringstream s;
  write_sampling_error_csv({{80, 0.2, 0.05, 10}}, s);
  EXPECT_EQ(s.str(), "grid_size,cell_size,mean_error,num_samples\n80,0.200000,0.050000,10\n");
}

TEST(CsvWriters, OverlayListsEveryPosition)
{
  const Fixture f = make_fixture();
  Rng rng(1);
  const RolloutResult r = rollout(f.params, f.sample, f.spec, {}, rng);
  std::ostringstream out;
  write_overlay_csv(f.sample, r.predicted, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "ped_id,step,kind,x,y");
  std::map<std::string, std::size_t> kinds;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto c = line.find(',', b + 1);
    ++kinds[line.substr(b + 1, c - b - 1)];
  }
  // Target 20 + ped 2 20 + ped 3 5 + ped 4 14 observed/ground-truth rows.
  EXPECT_EQ(kinds["obs"] + kinds["gt"], 20u + 20u + 5u + 14u);
  EXPECT_EQ(kinds["pred"], 12u * r.predicted.size());
  EXPECT_EQ(rows, kinds["obs"] + kinds["gt"] + kinds["pred"]);
}

}  // namespace
}  // namespace socprob::eval
