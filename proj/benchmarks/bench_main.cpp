#include <cmath>
#include <numbers>
#include <random>

#include <benchmark/benchmark.h>

#include "emvqm/curve.hpp"
#include "emvqm/fixtures.hpp"
#include "emvqm/optical_flow.hpp"
#include "emvqm/spatial.hpp"
#include "emvqm/superpixels.hpp"
#include "emvqm/svr.hpp"
#include "emvqm/temporal.hpp"

using namespace emvqm;

namespace {

Curve wobbly_circle(int n, double wobble, bool closed) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const double r = 10.0 * (1.0 + wobble * std::sin(5.0 * t));
    pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return Curve(std::move(pts), closed);
}

void BM_ElasticDistance(benchmark::State& state) {
  ElasticParams p;
  p.n_samples = static_cast<int>(state.range(0));
  p.cyclic_align = state.range(1) != 0;
  const Curve a = wobbly_circle(200, 0.1, true), b = wobbly_circle(173, 0.2, true);
  for (auto _ : state) benchmark::DoNotOptimize(elastic_distance(a, b, p));
}
BENCHMARK(BM_ElasticDistance)->Args({128, 0})->Args({128, 1})->Args({256, 1});

void BM_ComputeFlow(benchmark::State& state) {
  FixtureParams p;
  p.width = p.height = static_cast<int>(state.range(0));
  p.frames = 16;
  const auto pair = make_fixture(FixtureKind::local_warp, p, 1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_flow(pair.ref.frames[0], pair.ref.frames[1]));
  state.SetItemsProcessed(state.iterations() * p.width * p.height);
}
BENCHMARK(BM_ComputeFlow)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Slic(benchmark::State& state) {
  FixtureParams p;
  p.frames = 16;
  const auto pair = make_fixture(FixtureKind::local_warp, p, 2);
  const int side = static_cast<int>(state.range(0));
  const cv::Mat patch = pair.ref.frames[0](cv::Rect(96, 96, side, side)).clone();
  for (auto _ : state) benchmark::DoNotOptimize(slic_segment(patch, 32, 10.0));
}
BENCHMARK(BM_Slic)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_EmSpaFrame(benchmark::State& state) {
  FixtureParams p;
  p.width = p.height = static_cast<int>(state.range(0));
  p.frames = 16;
  const auto pair = make_fixture(FixtureKind::local_warp, p, 3);
  for (auto _ : state) benchmark::DoNotOptimize(em_spa_frame(pair.ref.frames[0], pair.syn.frames[0]));
}
BENCHMARK(BM_EmSpaFrame)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_TemporalFeatures(benchmark::State& state) {
  FixtureParams p;
  p.width = p.height = static_cast<int>(state.range(0));
  p.frames = 16;
  const auto pair = make_fixture(FixtureKind::local_warp, p, 4);
  for (auto _ : state) benchmark::DoNotOptimize(temporal_features(pair.ref.frames, pair.syn.frames));
}
BENCHMARK(BM_TemporalFeatures)->Arg(128)->Unit(benchmark::kMillisecond)->Iterations(2);

void BM_SvrTrain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u;
  std::vector<double> w(kFeatureCount);
  for (double& v : w) v = g(rng);
  std::vector<std::vector<double>> x(n, std::vector<double>(kFeatureCount));
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      x[i][j] = u(rng);
      y[i] += w[j] * x[i][j];
    }
  for (auto _ : state) benchmark::DoNotOptimize(svr_train(x, y));
}
BENCHMARK(BM_SvrTrain)->Arg(24)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
