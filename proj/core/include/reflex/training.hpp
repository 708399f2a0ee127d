// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.hpp
 * @brief  Mini-batch maximum-likelihood training and the K-fold driver.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/metrics.hpp"
#include "reflex/model.hpp"

namespace reflex {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t folds = 10;
  bool train_on_all = false;
  double clip_norm = 0.0;  // 0 disables clipping

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss_per_token = 0.0;
  std::size_t steps = 0;  // optimizer steps so far
};

using EpochObserver = std::function<void(const EpochStats&)>;

/// Loss of one batch: -(sum of log-likelihoods) / (output tokens incl. EOS).
ad::Tensor batch_loss(const TransducerModel& model, std::span<const CognatePair* const> batch);

/// Trains a model initialised from `model_config.seed` on `corpus.pairs()[indices]`.
/// Batch order is reshuffled every epoch from `train_config.seed`.
TransducerModel train(const Corpus& corpus, std::span<const std::size_t> indices, const ModelConfig& model_config,
                      const TrainConfig& train_config, const EpochObserver& observer = {});
/// Same, on every pair in the corpus.
TransducerModel train(const Corpus& corpus, const ModelConfig& model_config, const TrainConfig& train_config,
                      const EpochObserver& observer = {});

/// Continues training an existing model in place (no re-initialisation).
void train_in_place(TransducerModel& model, std::span<const CognatePair* const> pairs, const TrainConfig& train_config,
                    const EpochObserver& observer = {});

struct DecodedPair {
  std::size_t pair_index = 0;
  SegmentSeq predicted;
  bool ended_with_eos = false;
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<DecodedPair> outputs;
  std::vector<EvalRecord> records;  // parallel to `outputs`
  RateBreakdown rates;
  double final_loss = 0.0;
};

struct KFoldResult {
  std::vector<FoldResult> folds;
  RateBreakdown aggregate;  // pooled over every held-out pair
};

/// Seeds used for fold `fold`: model initialisation and batch shuffling.
struct FoldSeeds {
  std::uint64_t model;
  std::uint64_t shuffle;
};
FoldSeeds fold_seeds(std::uint64_t master, std::size_t fold);

/// Decodes `indices` greedily and scores them against gold.
std::vector<DecodedPair> decode_pairs(const TransducerModel& model, const Corpus& corpus,
                                      std::span<const std::size_t> indices);

/// K-fold cross-validation: folds from `make_folds(corpus, K, seed)`, one
/// independently seeded model per fold, up to `jobs` folds in parallel.
KFoldResult run_kfold(const Corpus& corpus, const ModelConfig& model_config, const TrainConfig& train_config,
                      std::size_t jobs = 1,
                      const std::function<void(std::size_t fold, const EpochStats&)>& observer = {});

}  // namespace reflex
