// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  Language-conditioned LSTM transducer with exact hard monotonic
 *         attention.
 *
 * Architecture:
 *   - a language embedding row z, read through the mode activation
 *     (identity, sigmoid, or straight-through Heaviside);
 *   - per input position, [one_hot(x_j) ; z] times a bias-free fusion matrix;
 *   - a bidirectional LSTM encoder whose two directions each have width
 *     hidden_dim / 2, concatenated into hidden_dim-wide states enc_j;
 *   - an LSTM decoder over the previous output symbol, initialised from the
 *     final encoder states;
 *   - alignment scores s(t, j) = dec_t^T W_a enc_j; from position i the
 *     next position j >= i is chosen with softmax(s(t, .)) renormalised over
 *     the suffix j >= i (a 0th-order monotonic chain);
 *   - emissions p(y | t, j) = softmax(W_o tanh(W_d dec_t + W_e enc_j + b) + b_o).
 *
 * The likelihood sums over every monotone alignment by dynamic programming.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/tensor.hpp"

namespace reflex {

enum class EmbeddingMode { kDense, kSigmoid, kStraightThrough };

std::string_view to_string(EmbeddingMode mode);
/// Accepts "dense", "sigmoid", "st" / "straight-through".
EmbeddingMode parse_embedding_mode(std::string_view text);

struct ModelConfig {
  std::size_t lang_dim = 128;
  std::size_t emb_dim = 128;
  std::size_t hidden_dim = 256;  // must be even
  EmbeddingMode mode = EmbeddingMode::kDense;
  std::size_t max_decode_len = 64;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LstmParams {
  ad::Tensor weight;  // (input + hidden, 4 * hidden), gate order i, f, g, o
  ad::Tensor bias;    // (4 * hidden)
};

struct ModelParameters {
  ad::Tensor language_table;  // (languages, lang_dim), raw pre-activation rows
  ad::Tensor fusion;          // (input vocab + lang_dim, emb_dim)
  LstmParams encoder_forward;
  LstmParams encoder_backward;
  ad::Tensor output_embedding;  // (output vocab, emb_dim)
  LstmParams decoder;
  ad::Tensor attention;     // (hidden, hidden)
  ad::Tensor emit_decoder;  // (hidden, hidden)
  ad::Tensor emit_encoder;  // (hidden, hidden)
  ad::Tensor emit_bias;     // (hidden)
  ad::Tensor output_weight;  // (hidden, output vocab)
  ad::Tensor output_bias;    // (output vocab)

  /// Stable (name, tensor) listing used by checkpoints and optimizers.
  std::vector<std::pair<std::string, ad::Tensor>> named() const;
};

class TransducerModel {
 public:
  /// Fresh model with parameters drawn from `config.seed`.
  TransducerModel(ModelConfig config, Vocabulary input_vocab, Vocabulary output_vocab,
                  std::vector<std::string> languages);
  /// Model sized for `corpus`.
  TransducerModel(ModelConfig config, const Corpus& corpus);

  TransducerModel(TransducerModel&&) noexcept = default;
  TransducerModel& operator=(TransducerModel&&) noexcept = default;
  TransducerModel(const TransducerModel&) = delete;
  TransducerModel& operator=(const TransducerModel&) = delete;

  /// Deep copy; the clone shares no tensor storage with this model.
  TransducerModel clone() const;

  const ModelConfig& config() const noexcept { return config_; }
  EmbeddingMode mode() const noexcept { return config_.mode; }
  const Vocabulary& input_vocab() const noexcept { return input_vocab_; }
  const Vocabulary& output_vocab() const noexcept { return output_vocab_; }
  const std::vector<std::string>& languages() const noexcept { return languages_; }
  LanguageId language_id(std::string_view name) const;
  void check_language(LanguageId id) const;

  const ModelParameters& params() const noexcept { return params_; }
  ModelParameters& params() noexcept { return params_; }
  std::vector<ad::Tensor> parameter_list() const;

 private:
  ModelConfig config_;
  Vocabulary input_vocab_;
  Vocabulary output_vocab_;
  std::vector<std::string> languages_;
  ModelParameters params_;
};

/// Mode activation applied to raw embedding values.
ad::Tensor activate_embedding(EmbeddingMode mode, const ad::Tensor& raw);

/// Activated embedding of language `language`, shape (lang_dim).
ad::Tensor read_language_embedding(const TransducerModel& model, LanguageId language);

/// Encoder states, shape (|x|, hidden_dim).
ad::Tensor encode(const TransducerModel& model, const SegmentSeq& x, LanguageId language);
/// Same, with an already-activated language vector substituted for z.
ad::Tensor encode_with_embedding(const TransducerModel& model, const SegmentSeq& x, const ad::Tensor& z);

/// log p(y | x, language) for every pair in the batch, shape (B). This is the
/// training path; it differentiates into every parameter.
ad::Tensor batch_log_likelihood(const TransducerModel& model, std::span<const CognatePair* const> batch);

/// log p(y | x, language), marginalised over all monotone alignments. y must
/// not contain EOS; it is appended internally.
double sequence_log_likelihood(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                               LanguageId language);

/// Log-potentials of the alignment chain for y + EOS, computed one decoder
/// step at a time. `emission(t, j)` = log p(y_t | t, j); `score(t, j)` = s(t, j).
struct AlignmentPotentials {
  std::size_t steps = 0;      // |y| + 1
  std::size_t positions = 0;  // |x|
  std::vector<double> emission;
  std::vector<double> score;

  double emission_at(std::size_t t, std::size_t j) const { return emission[t * positions + j]; }
  double score_at(std::size_t t, std::size_t j) const { return score[t * positions + j]; }
};

AlignmentPotentials alignment_potentials(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                                         LanguageId language);

/// Output position -> input position (0-based), non-decreasing.
struct AlignmentPath {
  std::vector<std::size_t> positions;  // one entry per output segment (EOS excluded)
  double log_score = 0.0;              // joint log probability of the best path, EOS included
};

/// Exact log marginal of the alignment chain defined by `potentials`.
double monotonic_log_marginal(const AlignmentPotentials& potentials);
/// Best path of the chain; ties go to the smaller input index. The returned
/// path drops the EOS step.
AlignmentPath monotonic_viterbi(const AlignmentPotentials& potentials);

AlignmentPath viterbi_alignment(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                                LanguageId language);

struct DecodeResult {
  SegmentSeq output;          // EOS stripped
  bool ended_with_eos = false;
};

/// Greedy decoding from the marginal predictive distribution: the alignment
/// posterior given the prefix is folded into the per-position emissions.
DecodeResult greedy_decode_with_embedding(const TransducerModel& model, const SegmentSeq& x, const ad::Tensor& z,
                                          std::size_t max_len);
SegmentSeq greedy_decode(const TransducerModel& model, const SegmentSeq& x, LanguageId language,
                         std::optional<std::size_t> max_len = std::nullopt);

/// log p(y_t | y_<t, x) for t = 1..|y|+1 (the last entry scores EOS), from
/// the same incremental machinery as greedy decoding.
std::vector<double> teacher_forced_predictive(const TransducerModel& model, const SegmentSeq& x,
                                              const SegmentSeq& y, LanguageId language);

/// Binary checkpoint: magic, format version, JSON header (config,
/// vocabularies, languages, tensor manifest), little-endian float64 payload.
void save_model(const TransducerModel& model, const std::filesystem::path& path);
TransducerModel load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace reflex
