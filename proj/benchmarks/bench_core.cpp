
#include <benchmark/benchmark.h>

#include <string>

#include "vplace/fractal.hpp"
#include "vplace/ingestion.hpp"
#include "vplace/placement.hpp"
#include "vplace/synth.hpp"

using namespace vplace;

namespace {

const GridSpec kGrid{100.0, 40, 40, 40.0, -80.0, 40.0};

CountMatrix random_counts(int rows, int cols, int max_count, std::uint64_t seed) {
  Rng rng(seed);
  CountMatrix m(rows, cols);
  for (auto& v : m.flat()) v = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_count) + 1));
  return m;
}

SnapshotSeries city(double snapshots) {
  StreamSpec s;
  s.grid = kGrid;
  s.attractor = {AttractorKind::sierpinski_triangle, 3990.0, 5.0, 5.0};
  s.global_rate = 1.0;
  s.duration = snapshots * 180.0;
  s.seed = 9;
  BucketOptions opt;
  opt.excluded_hours = {};
  opt.end_time = static_cast<std::int64_t>(s.duration);
  return bucket_snapshots(gen_ride_stream(s), kGrid, opt).series;
}

}  // namespace

static void BM_Reward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto p = random_counts(side, side, 4, 1);
  const PlacementMatrix g{random_counts(side, side, 4, 2)};
  const auto n = g.total();
  for (auto _ : state) benchmark::DoNotOptimize(reward(p, g, n));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Reward)->Arg(10)->Arg(40)->Arg(160);

static void BM_CorrelationSum(benchmark::State& state) {
  const auto pts = gen_points({AttractorKind::sierpinski_triangle, 4000.0, 0.0, 0.0},
                              static_cast<std::size_t>(state.range(0)), 3);
  const auto ladder = dyadic_ladder(4000.0, 10);
  for (auto _ : state) benchmark::DoNotOptimize(correlation_sum(pts, ladder));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorrelationSum)->Arg(10000)->Arg(100000);

static void BM_EstimateD2(benchmark::State& state) {
  const auto pts = gen_points({AttractorKind::sierpinski_carpet, 4000.0, 0.0, 0.0}, 100000, 4);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_d2(pts));
}
BENCHMARK(BM_EstimateD2)->Unit(benchmark::kMillisecond);

static void BM_OptOracle(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GridSpec g{100.0, side, side, 0.0, 0.0, 0.0};
  const auto d = random_counts(side, side, 3, 5);
  const auto p = random_counts(side, side, 3, 6);
  const auto params = AlgoParams::defaults(Algorithm::opt);
  for (auto _ : state) benchmark::DoNotOptimize(opt_oracle(d, p, params, g));
}
BENCHMARK(BM_OptOracle)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

static void BM_Simulate(benchmark::State& state) {
  const auto series = city(500);
  const auto algo = static_cast<Algorithm>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(series, AlgoParams::defaults(algo, 1)));
  state.SetLabel(std::string(to_string(algo)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(series.snapshots.size()));
}
BENCHMARK(BM_Simulate)
    ->Arg(static_cast<int>(Algorithm::urand_nh))
    ->Arg(static_cast<int>(Algorithm::pp_lh))
    ->Arg(static_cast<int>(Algorithm::ftl_ch))
    ->Arg(static_cast<int>(Algorithm::opt))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
