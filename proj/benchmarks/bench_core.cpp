#include <benchmark/benchmark.h>

#include "ierg/inner_sampler.hpp"
#include "ierg/model.hpp"
#include "ierg/pseudolikelihood.hpp"
#include "ierg/sampler.hpp"
#include "ierg/simulation.hpp"

using namespace ierg;

namespace {

ParamVector banded(std::size_t p) {
  ParamVector t(p);
  for (std::size_t j = 0; j + 1 < p; ++j) t.set_gamma(j, j + 1, j % 2 ? -0.8 : 0.8);
  return t;
}

void BM_GibbsSweep(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto theta = banded(p);
  auto y = generate_dataset(SimDesign{}).x;
  if (p != y.p()) y = ItemResponseMatrix(300, p);
  Rng rng(1);
  for (auto _ : state) {
    y = gibbs_sweep(y, theta, rng);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.n() * p));
}
BENCHMARK(BM_GibbsSweep)->Arg(10)->Arg(24)->Arg(70);

void BM_ExactPartition(benchmark::State& state) {
  const auto theta = banded(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(log_row_partition(theta));
}
BENCHMARK(BM_ExactPartition)->DenseRange(8, 16, 4);

void BM_DmhAuxiliaryStatistic(benchmark::State& state) {
  const auto x = generate_dataset(SimDesign{}).x;
  DmhKernel kernel(x, ParamVector(x.p()), static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(kernel.auxiliary_statistic(30, 0.1, ++seed));
}
BENCHMARK(BM_DmhAuxiliaryStatistic)->Arg(1)->Arg(10)->Arg(300);

void BM_DmhIteration(benchmark::State& state) {
  const auto x = generate_dataset(SimDesign{}).x;
  SamplerConfig cfg;
  cfg.iterations = 1;
  cfg.burn_in = 0;
  cfg.aux_sweeps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_chain(x, cfg));
}
BENCHMARK(BM_DmhIteration)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Elasso(benchmark::State& state) {
  SimDesign d;
  d.p = static_cast<std::size_t>(state.range(0));
  d.groups = d.p / 4;
  d.class_inside_groups = block_class_mapping(d.classes, d.groups);
  const auto x = generate_dataset(d).x;
  for (auto _ : state) benchmark::DoNotOptimize(fit_elasso(x, ElassoConfig{}));
}
BENCHMARK(BM_Elasso)->Arg(12)->Arg(24)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
