#include <benchmark/benchmark.h>

#include "bpi/boundary.hpp"
#include "bpi/density.hpp"
#include "bpi/evaluator.hpp"
#include "bpi/generators.hpp"

namespace {

bpi::Dataset mixture(std::size_t T, std::uint64_t seed) {
  return bpi::sample_beta_uniform_mixture(T, 3, 4.0, 4.0, 0.2, seed);
}

void BM_KnnDensity(benchmark::State& state) {
  const bpi::Dataset ref = mixture(7000, 1), queries = mixture(3000, 2);
  const bpi::NeighborIndex index(ref);
  for (auto _ : state) {
    const bpi::DensityEstimates e = bpi::knn_density(index, queries, 35);
    benchmark::DoNotOptimize(e.values.data());
  }
}
BENCHMARK(BM_KnnDensity);

void BM_UniformKernel(benchmark::State& state) {
  const bpi::Dataset ref = mixture(7000, 1), queries = mixture(3000, 2);
  const bpi::NeighborIndex index(ref);
  for (auto _ : state) {
    const bpi::DensityEstimates e = bpi::uniform_kernel_density(index, queries, 35);
    benchmark::DoNotOptimize(e.values.data());
  }
}
BENCHMARK(BM_UniformKernel);

void BM_CorrectedDensity(benchmark::State& state) {
  const bpi::Dataset ref = mixture(7000, 1), queries = mixture(3000, 2);
  for (auto _ : state) {
    bpi::PluginEvaluator ev(queries, ref, 35);
    benchmark::DoNotOptimize(ev.corrected(35).values.data());
  }
}
BENCHMARK(BM_CorrectedDensity);

}  // namespace
