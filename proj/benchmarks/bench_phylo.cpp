// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "reflex/phylo.hpp"
#include "reflex/random.hpp"

namespace {

using namespace reflex;

DistanceMatrix random_matrix(std::size_t n, Rng& rng) {
  std::vector<std::string> taxa;
  for (std::size_t i = 0; i < n; ++i) taxa.push_back("t" + std::to_string(i));
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = rng.uniform(0.5, 2.0);
  }
  return DistanceMatrix(std::move(taxa), std::move(d));
}

void BM_NeighborJoin(benchmark::State& state) {
  Rng rng(7);
  const auto d = random_matrix(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(neighbor_join(d));
}
BENCHMARK(BM_NeighborJoin)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

void BM_QuartetCounts(benchmark::State& state) {
  Rng rng(9);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = neighbor_join(random_matrix(n, rng));
  const auto b = neighbor_join(random_matrix(n, rng));
  for (auto _ : state) benchmark::DoNotOptimize(quartet_counts(a, b));
}
BENCHMARK(BM_QuartetCounts)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

}  // namespace
