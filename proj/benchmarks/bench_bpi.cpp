#include <benchmark/benchmark.h>

#include "bpi/evaluator.hpp"
#include "bpi/functionals.hpp"
#include "bpi/generators.hpp"
#include "bpi/inference.hpp"

namespace {

void BM_ShannonEndToEnd(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const bpi::Dataset data = bpi::sample_beta_uniform_mixture(T, 3, 4.0, 4.0, 0.2, 1);
  const bpi::SampleSplit sp = bpi::split(data, 0.7, 2);
  const bpi::Functional f = bpi::shannon_functional();
  for (auto _ : state) {
    bpi::PluginEvaluator ev = bpi::PluginEvaluator::from_split(data, sp, 35);
    benchmark::DoNotOptimize(bpi::bpi_estimate_bc(ev, f, 35, true).estimate);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ShannonEndToEnd)->Arg(10000)->Arg(50000);

void BM_KSweepReuse(benchmark::State& state) {
  const bpi::Dataset data = bpi::sample_beta_uniform_mixture(10000, 3, 4.0, 4.0, 0.2, 1);
  const bpi::SampleSplit sp = bpi::split(data, 0.7, 2);
  const bpi::Functional f = bpi::shannon_functional();
  for (auto _ : state) {
    bpi::PluginEvaluator ev = bpi::PluginEvaluator::from_split(data, sp, 100);
    double s = 0.0;
    for (std::size_t k = 10; k <= 100; k += 10) s += bpi::bpi_estimate_bc(ev, f, k, true).estimate;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_KSweepReuse);

void BM_MonteCarlo(benchmark::State& state) {
  bpi::TrialSpec spec;
  spec.T = 5000;
  spec.truth = 0.0;
  for (auto _ : state) {
    const bpi::TrialResults r = bpi::monte_carlo(spec, 4);
    benchmark::DoNotOptimize(r.summary.mean);
  }
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace
