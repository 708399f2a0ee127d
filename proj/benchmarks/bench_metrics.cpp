// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "reflex/metrics.hpp"
#include "reflex/random.hpp"

namespace {

using namespace reflex;

SegmentSeq random_seq(Rng& rng, std::size_t len) {
  SegmentSeq s(len);
  for (auto& v : s) v = static_cast<SegmentId>(3 + rng.index(20));
  return s;
}

void BM_Levenshtein(benchmark::State& state) {
  Rng rng(11);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_seq(rng, n);
  const auto b = random_seq(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Levenshtein)->RangeMultiplier(4)->Range(4, 256)->Complexity();

}  // namespace
