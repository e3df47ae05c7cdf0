#include <benchmark/benchmark.h>

#include "parkzone/ingest.hpp"
#include "parkzone/mixture.hpp"
#include "parkzone/model_selection.hpp"
#include "parkzone/spatial.hpp"
#include "parkzone/synth.hpp"

using namespace parkzone;

namespace {

SynthData season(int blocks, int weeks) {
  SynthSpec spec;
  spec.n_blocks = blocks;
  spec.weeks = weeks;
  spec.seed = 3;
  return generate(spec);
}

void BM_BuildGrid(benchmark::State& state) {
  auto data = season(static_cast<int>(state.range(0)), 4);
  for (auto _ : state) {
    auto r = build_grid(data.transactions, data.blockfaces, data.schedule);
    benchmark::DoNotOptimize(r.grid.at(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.transactions.size()));
}
BENCHMARK(BM_BuildGrid)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_EmFit(benchmark::State& state) {
  auto data = season(200, 1);
  auto mids = grid_midpoints(data.expected, data.blockfaces);
  auto features = slice_features(mids, data.expected.column(0));
  EmConfig cfg;
  cfg.seed = 1;
  for (auto _ : state) {
    auto m = em_fit(features, static_cast<int>(state.range(0)), cfg);
    benchmark::DoNotOptimize(m.log_likelihood);
  }
}
BENCHMARK(BM_EmFit)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

void BM_MoransI(benchmark::State& state) {
  auto data = season(static_cast<int>(state.range(0)), 1);
  auto mids = grid_midpoints(data.expected, data.blockfaces);
  auto w = build_weights(mids, data.expected.block_ids(), WeightMode::global_distance, {});
  auto occ = data.expected.column(0);
  for (auto _ : state) benchmark::DoNotOptimize(morans_i(occ, w));
}
BENCHMARK(BM_MoransI)->Arg(50)->Arg(200)->Arg(800);

void BM_AnalyticSignificance(benchmark::State& state) {
  auto data = season(200, 1);
  auto mids = grid_midpoints(data.expected, data.blockfaces);
  auto w = build_weights(mids, data.expected.block_ids(), WeightMode::knn, {5, {}});
  auto occ = data.expected.column(0);
  for (auto _ : state) benchmark::DoNotOptimize(significance(occ, w, {}).p_value);
}
BENCHMARK(BM_AnalyticSignificance);

void BM_PermutationSignificance(benchmark::State& state) {
  auto data = season(200, 1);
  auto mids = grid_midpoints(data.expected, data.blockfaces);
  auto w = build_weights(mids, data.expected.block_ids(), WeightMode::knn, {5, {}});
  auto occ = data.expected.column(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(significance(occ, w, {SignificanceMethod::permutation, 999, 1}).p_value);
  }
}
BENCHMARK(BM_PermutationSignificance)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
