// SPDX-License-Identifier: Apache-2.0
/**
 * @file   latent_lab.hpp
 * @brief  Probes of the language-embedding space: activity heatmap,
 *         single-bit perturbations, random latent sampling and the echo-form
 *         final-agreement experiment.
 *
 * Every function here only reads the model. Fixed seeds give identical
 * results regardless of `jobs`.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reflex/model.hpp"
#include "reflex/random.hpp"

namespace reflex {

struct ActivityHeatmap {
  std::vector<std::string> languages;
  std::size_t dims = 0;
  std::vector<std::vector<int>> cells;          // languages x dims, 0/1
  std::vector<std::size_t> active_per_language;
  std::size_t inactive_dims = 0;                // columns that are 0 for every language
};

/// Straight-through models only (ModeError otherwise).
ActivityHeatmap activity_heatmap(const TransducerModel& model);

struct PerturbationReport {
  LanguageId language = 0;
  SegmentSeq etymon;
  SegmentSeq base_output;  // decode with the unperturbed embedding
  std::vector<std::pair<std::size_t, SegmentSeq>> flips;  // (dimension, output)
  std::size_t unique_outputs = 0;                        // distinct outputs over `flips`
};

/// Flips each bit of the binary embedding of `language` in turn and decodes
/// `etymon` greedily. Straight-through models only.
PerturbationReport nearest_neighbors(const TransducerModel& model, LanguageId language, const SegmentSeq& etymon,
                                     std::size_t jobs = 1);

enum class SamplingFamily { kGaussian, kBeta, kBinomial };

struct SamplingRegime {
  SamplingFamily family = SamplingFamily::kBinomial;
  double parameter = 0.5;  // sigma, alpha (= beta) or p
  std::size_t samples = 100;

  void validate() const;
  /// The embedding mode whose activated space this family samples.
  EmbeddingMode mode() const;
  /// "gaussian:0.1", "beta:0.5", "binomial:0.2"; optional ":N" sample count.
  static SamplingRegime parse(const std::string& text);
  std::string to_string() const;
};

/// `regime.samples` vectors of length `dims`, drawn in row order from `rng`.
std::vector<std::vector<double>> draw_samples(const SamplingRegime& regime, std::size_t dims, Rng& rng);

struct SampleReport {
  SamplingRegime regime;
  std::vector<SegmentSeq> etyma;
  std::vector<std::vector<SegmentSeq>> outputs;  // etyma x samples
  std::vector<std::size_t> unique_outputs;       // per etymon
  double mean_unique = 0.0;
  std::size_t unterminated = 0;                  // decodes that hit the length cap
};

/// Decodes every etymon under the same `regime.samples` sampled embeddings.
/// Throws ArgumentError when the regime family does not match the model mode.
SampleReport sample_latent(const TransducerModel& model, const SamplingRegime& regime,
                           const std::vector<SegmentSeq>& etyma, std::uint64_t seed, std::size_t jobs = 1);

/// A base etymon plus variants that differ from it only in the first segment.
struct EchoCohort {
  std::vector<std::string> base;
  std::vector<std::string> substitutes;  // replacement first segments
  std::optional<std::string> exclude;    // ECMAScript regex over the space-joined form

  /// Base first, then each substitute in order; duplicates of an earlier
  /// member and forms matching `exclude` are dropped.
  std::vector<std::vector<std::string>> members() const;
};

/// One cohort per line: base segments <TAB> substitute segments [<TAB> regex].
/// '#' starts a comment line.
std::vector<EchoCohort> parse_cohorts(std::istream& in);
std::vector<EchoCohort> load_cohorts(const std::filesystem::path& path);

/// Longest common suffix over the mean length. Two empty forms give 1.
double final_agreement(const SegmentSeq& a, const SegmentSeq& b);

struct EchoRegimeResult {
  double p = 0.0;
  std::size_t pairs = 0;
  std::size_t agreeing = 0;        // ratio > 0.5
  double proportion = 0.0;
  std::vector<double> ratios;      // in cohort / pair order
  std::size_t unterminated = 0;
};

struct EchoReport {
  std::vector<EchoRegimeResult> regimes;
  std::size_t skipped_cohorts = 0;  // fewer than two members after exclusion
};

/// Draws a fresh Bernoulli(p) embedding for every decoded form, strips
/// suprasegmentals from the outputs and scores every within-cohort pair.
/// Straight-through models only.
EchoReport echo_experiment(const TransducerModel& model, const std::vector<EchoCohort>& cohorts,
                           const std::vector<double>& regimes, std::uint64_t seed, std::size_t jobs = 1);

}  // namespace reflex
