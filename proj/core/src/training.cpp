// SPDX-License-Identifier: Apache-2.0
#include "reflex/training.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "reflex/adam.hpp"
#include "reflex/errors.hpp"
#include "reflex/random.hpp"

namespace reflex {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (!train_on_all && folds < 2) throw ArgumentError(fmt::format("K must be at least 2 (got {})", folds));
  if (clip_norm < 0.0) throw ArgumentError("clip norm must be non-negative");
}

ad::Tensor batch_loss(const TransducerModel& model, std::span<const CognatePair* const> batch) {
  std::size_t tokens = 0;
  for (const auto* p : batch) tokens += p->reflex.size() + 1;
  return ad::scale(ad::sum(batch_log_likelihood(model, batch)), -1.0 / static_cast<double>(tokens));
}

void train_in_place(TransducerModel& model, std::span<const CognatePair* const> pairs, const TrainConfig& config,
                    const EpochObserver& observer) {
  if (pairs.empty()) throw ArgumentError("training set is empty");
  if (config.batch_size == 0) throw ArgumentError("batch size must be positive");
  auto params = model.parameter_list();
  Adam adam(params, AdamConfig{.learning_rate = config.learning_rate});
  Rng rng(config.seed);
  std::vector<const CognatePair*> order(pairs.begin(), pairs.end());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const CognatePair* const> batch(order.data() + start, end - start);
      for (auto& p : params) p.zero_grad();
      auto loss = batch_loss(model, batch);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError(
            fmt::format("non-finite loss {} at epoch {}, batch {} ({} pairs)", value, epoch, batch_index, batch.size()));
      }
      ad::backward(loss);
      if (config.clip_norm > 0.0) clip_grad_norm(params, config.clip_norm);
      adam.step();
      std::size_t tokens = 0;
      for (const auto* p : batch) tokens += p->reflex.size() + 1;
      loss_sum += value * static_cast<double>(tokens);
      token_sum += tokens;
    }
    if (observer) {
      observer(EpochStats{epoch, loss_sum / static_cast<double>(token_sum), static_cast<std::size_t>(adam.steps())});
    }
  }
}

TransducerModel train(const Corpus& corpus, std::span<const std::size_t> indices, const ModelConfig& model_config,
                      const TrainConfig& train_config, const EpochObserver& observer) {
  if (indices.empty()) throw ArgumentError("training set is empty");
  TransducerModel model(model_config, corpus);
  std::vector<const CognatePair*> pairs;
  pairs.reserve(indices.size());
  for (auto i : indices) {
    if (i >= corpus.size()) throw ArgumentError(fmt::format("pair index {} out of range", i));
    pairs.push_back(&corpus.pairs()[i]);
  }
  train_in_place(model, pairs, train_config, observer);
  return model;
}

TransducerModel train(const Corpus& corpus, const ModelConfig& model_config, const TrainConfig& train_config,
                      const EpochObserver& observer) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train(corpus, all, model_config, train_config, observer);
}

FoldSeeds fold_seeds(std::uint64_t master, std::size_t fold) {
  const auto base = derive_seed(master, 1000 + fold);
  return {derive_seed(base, 1), derive_seed(base, 2)};
}

std::vector<DecodedPair> decode_pairs(const TransducerModel& model, const Corpus& corpus,
                                      std::span<const std::size_t> indices) {
  std::vector<DecodedPair> out;
  out.reserve(indices.size());
  for (auto i : indices) {
    const auto& pair = corpus.pairs()[i];
    auto result = greedy_decode_with_embedding(model, pair.etymon, read_language_embedding(model, pair.language),
                                               model.config().max_decode_len);
    out.push_back({i, std::move(result.output), result.ended_with_eos});
  }
  return out;
}

namespace {

FoldResult run_fold(const Corpus& corpus, const FoldSplit& split, const ModelConfig& model_config,
                    const TrainConfig& train_config,
                    const std::function<void(std::size_t, const EpochStats&)>& observer) {
  const auto seeds = fold_seeds(train_config.seed, split.fold);
  ModelConfig mc = model_config;
  mc.seed = seeds.model;
  TrainConfig tc = train_config;
  tc.seed = seeds.shuffle;

  FoldResult result;
  result.fold = split.fold;
  auto model = train(corpus, split.train, mc, tc, [&](const EpochStats& s) {
    result.final_loss = s.loss_per_token;
    if (observer) observer(split.fold, s);
  });
  result.outputs = decode_pairs(model, corpus, split.test);
  for (const auto& d : result.outputs) {
    const auto& pair = corpus.pairs()[d.pair_index];
    result.records.push_back({pair.language, pair.reflex, d.predicted});
  }
  if (!result.records.empty()) result.rates = error_rates(result.records);
  return result;
}

}  // namespace

KFoldResult run_kfold(const Corpus& corpus, const ModelConfig& model_config, const TrainConfig& train_config,
                      std::size_t jobs, const std::function<void(std::size_t, const EpochStats&)>& observer) {
  train_config.validate();
  if (train_config.train_on_all) throw ArgumentError("run_kfold needs a fold count, not train-on-all");
  const auto splits = make_folds(corpus, train_config.folds, train_config.seed);

  KFoldResult out;
  out.folds.resize(splits.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::mutex observer_mutex;
  auto locked_observer = [&](std::size_t fold, const EpochStats& s) {
    if (!observer) return;
    std::lock_guard lock(observer_mutex);
    observer(fold, s);
  };

  auto worker = [&] {
    for (std::size_t k = next++; k < splits.size(); k = next++) {
      try {
        out.folds[k] = run_fold(corpus, splits[k], model_config, train_config, locked_observer);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, splits.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<EvalRecord> pooled;
  for (const auto& f : out.folds) pooled.insert(pooled.end(), f.records.begin(), f.records.end());
  out.aggregate = error_rates(pooled);
  return out;
}

}  // namespace reflex
