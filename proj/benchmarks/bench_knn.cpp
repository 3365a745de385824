#include <benchmark/benchmark.h>

#include "bpi/generators.hpp"
#include "bpi/knn.hpp"

namespace {

void BM_BuildIndex(benchmark::State& state) {
  const auto d = static_cast<int>(state.range(1));
  const bpi::Dataset data =
      bpi::sample_density(bpi::uniform_cube(d), static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    bpi::NeighborIndex index(data);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIndex)->Args({10000, 3})->Args({100000, 3})->Args({10000, 8});

void BM_QueryAll(benchmark::State& state) {
  const auto d = static_cast<int>(state.range(1));
  const std::size_t k = static_cast<std::size_t>(state.range(2));
  const bpi::Dataset ref = bpi::sample_density(bpi::uniform_cube(d), 7000, 2);
  const bpi::Dataset queries = bpi::sample_density(bpi::uniform_cube(d), 3000, 3);
  const bpi::NeighborIndex index(ref);
  for (auto _ : state) {
    const bpi::NeighborTable t = bpi::query_all(index, queries, k);
    benchmark::DoNotOptimize(t.k);
  }
  state.SetItemsProcessed(state.iterations() * 3000);
}
BENCHMARK(BM_QueryAll)->Args({3, 3, 35})->Args({3, 3, 200})->Args({8, 8, 35});

}  // namespace
