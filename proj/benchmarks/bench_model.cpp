// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "reflex/model.hpp"
#include "reflex/random.hpp"
#include "reflex/synthetic.hpp"
#include "reflex/training.hpp"

namespace {

using namespace reflex;

Corpus bench_corpus(std::size_t words) {
  LanguageRules rules{{"A", {parse_rule("t -> d / {a e i o u} _ {a e i o u}"), parse_rule("k -> tʃ / _ {i e}")}},
                      {"B", {parse_rule("a -> o"), parse_rule("s -> ∅ / _ #")}},
                      {"C", {parse_rule("p -> f"), parse_rule("n -> m / _ {p b}")}}};
  return generate_synthetic(random_lexicon(LexiconSpec{}, words, 1), rules, 2);
}

ModelConfig bench_config() {
  ModelConfig c;
  c.lang_dim = 16;
  c.emb_dim = 16;
  c.hidden_dim = 32;
  c.mode = EmbeddingMode::kSigmoid;
  c.seed = 3;
  return c;
}

void BM_MonotonicMarginal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  AlignmentPotentials p;
  p.steps = n + 1;
  p.positions = n;
  for (std::size_t i = 0; i < p.steps * p.positions; ++i) {
    p.emission.push_back(rng.uniform(-4.0, 0.0));
    p.score.push_back(rng.uniform(-2.0, 2.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(monotonic_log_marginal(p));
  state.SetComplexityN(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MonotonicMarginal)->RangeMultiplier(2)->Range(4, 64)->Complexity();

void BM_BatchLossBackward(benchmark::State& state) {
  const auto corpus = bench_corpus(100);
  const TransducerModel model(bench_config(), corpus);
  std::vector<const CognatePair*> batch;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)) && i < corpus.size(); ++i) {
    batch.push_back(&corpus.pairs()[i]);
  }
  for (auto _ : state) {
    for (auto t : model.parameter_list()) t.zero_grad();
    auto loss = batch_loss(model, batch);
    ad::backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_BatchLossBackward)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_GreedyDecode(benchmark::State& state) {
  const auto corpus = bench_corpus(20);
  const TransducerModel model(bench_config(), corpus);
  const auto& p = corpus.pairs().front();
  for (auto _ : state) benchmark::DoNotOptimize(greedy_decode(model, p.etymon, p.language, 16));
}
BENCHMARK(BM_GreedyDecode)->Unit(benchmark::kMicrosecond);

}  // namespace
