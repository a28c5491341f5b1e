#include <random>

#include <benchmark/benchmark.h>

#include <laftr/eval.hpp>
#include <laftr/generator.hpp>
#include <laftr/optimizer.hpp>

using namespace laftr;

namespace {

struct Instance {
  AdjacencyMatrix y;
  ObservationMask mask;
  ModelState state;
};

Instance make_instance(std::size_t n, std::size_t k) {
  auto y = sample_links(planted_blocks(n, k), planted_weights(k, 6.0), 3);
  FitConfig c;
  c.k_init = k;
  c.seed = 3;
  return {y, ObservationMask::all_off_diagonal(n), init_state(n, c)};
}

void BM_DeltaFlip(benchmark::State& st) {
  const auto inst = make_instance(static_cast<std::size_t>(st.range(0)), 4);
  std::size_t node = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(delta_objective_flip(inst.y, inst.mask, inst.state, node, node % 4));
    node = (node + 1) % inst.y.n();
  }
}
BENCHMARK(BM_DeltaFlip)->Arg(100)->Arg(400)->Arg(1600);

void BM_SweepZ(benchmark::State& st) {
  const auto inst = make_instance(static_cast<std::size_t>(st.range(0)), 4);
  for (auto _ : st) {
    st.PauseTiming();
    ModelState s = inst.state;
    st.ResumeTiming();
    sweep_z(inst.y, inst.mask, s);
    benchmark::DoNotOptimize(s.logits().flat().data());
  }
}
BENCHMARK(BM_SweepZ)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_OptimizeW(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  auto y = sample_links(planted_blocks(n, 3), planted_weights(3, 6.0), 3);
  const ModelState start(planted_blocks(n, 3), RealMatrix(3, 3, 0.0), 0.5);
  const auto mask = ObservationMask::all_off_diagonal(n);
  FitConfig c;
  for (auto _ : st) {
    ModelState s = start;
    optimize_w(y, mask, s, c);
    benchmark::DoNotOptimize(s.w().flat().data());
  }
}
BENCHMARK(BM_OptimizeW)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_AucRoc(benchmark::State& st) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScoredPairs pairs(static_cast<std::size_t>(st.range(0)));
  for (auto& p : pairs) {
    p.score = unit(rng);
    p.label = unit(rng) < 0.3 ? 1 : 0;
  }
  for (auto _ : st) benchmark::DoNotOptimize(auc_roc(pairs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_AucRoc)->Arg(1 << 10)->Arg(1 << 16);

void BM_FitPlanted(benchmark::State& st) {
  auto y = sample_links(planted_blocks(100, 3), planted_weights(3, 6.0), 1);
  const auto split = split_observations(y, 0.8, 1, false);
  FitConfig c;
  c.lambda = 5.0;
  c.births_per_iter = 3;
  c.seed = 1;
  for (auto _ : st) benchmark::DoNotOptimize(fit(y, split.train, c).final_state.k_plus());
}
BENCHMARK(BM_FitPlanted)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
