#include <benchmark/benchmark.h>

#include "randopt/graphopt.hpp"
#include "randopt/instances.hpp"
#include "randopt/ksat.hpp"
#include "randopt/ogp.hpp"
#include "randopt/parisi.hpp"
#include "randopt/spin.hpp"

using namespace randopt;

namespace {

void BM_TensorEnergy(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto p = static_cast<std::uint32_t>(state.range(1));
  RngStream rng(1, "bench/energy");
  const GaussianTensor j = gen_gaussian_tensor(n, p, rng);
  SpinConfig sigma(n);
  for (auto& s : sigma) s = rng.uniform() < 0.5 ? -1 : 1;
  for (auto _ : state) benchmark::DoNotOptimize(energy(j, sigma));
}
BENCHMARK(BM_TensorEnergy)->Args({200, 2})->Args({60, 3})->Args({30, 4});

void BM_BruteForceGroundState(benchmark::State& state) {
  RngStream rng(2, "bench/brute");
  const GaussianTensor j = gen_gaussian_tensor(static_cast<std::uint32_t>(state.range(0)), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_ground_state(j).energy);
}
BENCHMARK(BM_BruteForceGroundState)->Arg(14)->Arg(18)->Unit(benchmark::kMillisecond);

void BM_ParisiPde(benchmark::State& state) {
  const MixtureSpec spec = MixtureSpec::pure(static_cast<std::uint32_t>(state.range(0)));
  const PdeGrid grid = PdeGrid::for_spec(spec);
  OrderParam mu;
  mu.breakpoints = {0.0, 0.3, 0.7, 1.0};
  mu.values = {0.0, 0.8, 2.5};
  for (auto _ : state) benchmark::DoNotOptimize(solve_parisi_pde(mu, spec, grid));
}
BENCHMARK(BM_ParisiPde)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Dpll(benchmark::State& state) {
  const double c = static_cast<double>(state.range(1)) / 100.0;
  const auto n = static_cast<std::uint32_t>(state.range(0));
  std::vector<KSatFormula> formulas;
  RngStream rng(3, "bench/dpll");
  for (int i = 0; i < 16; ++i) formulas.push_back(gen_ksat(n, static_cast<std::size_t>(c * n), 3, rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dpll_solve(formulas[i++ % formulas.size()]).status);
}
BENCHMARK(BM_Dpll)->Args({100, 300})->Args({100, 426})->Args({150, 426})->Unit(benchmark::kMillisecond);

void BM_KarpGreedy(benchmark::State& state) {
  RngStream rng(4, "bench/greedy");
  const ErGraph g = gen_er_graph(static_cast<std::uint32_t>(state.range(0)), 0.5, rng);
  for (auto _ : state) benchmark::DoNotOptimize(karp_greedy_clique(g, rng).size());
}
BENCHMARK(BM_KarpGreedy)->Arg(1024)->Arg(4096);

void BM_GreedyIndependentSet(benchmark::State& state) {
  RngStream rng(5, "bench/greedy-is");
  const ErGraph g = gen_sparse_graph(static_cast<std::uint32_t>(state.range(0)), 5.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_independent_set(g, rng).size());
}
BENCHMARK(BM_GreedyIndependentSet)->Arg(10000);

void BM_OverlapHistogram(benchmark::State& state) {
  RngStream rng(6, "bench/histogram");
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const GaussianTensor j = gen_gaussian_tensor(n, 2, rng);
  SamplerConfig cfg;
  cfg.kind = SamplerKind::kAnnealed;
  cfg.sweeps = 50;
  const NearOptimumSet set = sample_near_optima(Model{j}, 0.3, 200, cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(overlap_histogram(set, OverlapMetric::kOverlap, 50).samples);
}
BENCHMARK(BM_OverlapHistogram)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
