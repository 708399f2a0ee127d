// SPDX-License-Identifier: Apache-2.0
/**
 * @file   alignment_ops.hpp
 * @brief  Fused differentiable ops for batched hard monotonic attention.
 *
 * Batched tensors use a time-major row layout: decoder-side matrices hold
 * row t * B + b, encoder-side matrices row j * B + b. A packed layout drops
 * the rows of finished sequences instead: step t then starts at
 * dec_offset[t] and sequence b sits at dec_offset[t] + dec_rank[b] (likewise
 * for the encoder). Pairwise outputs have shape (B, T, J); entries outside a
 * sequence's (steps, positions) are 0 and receive no gradient.
 */
#pragma once

#include <cstddef>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/tensor.hpp"

namespace reflex {

struct BatchLayout {
  std::size_t batch = 0;
  std::size_t max_steps = 0;      // T
  std::size_t max_positions = 0;  // J
  std::vector<std::size_t> steps;      // per sequence, |y| + 1
  std::vector<std::size_t> positions;  // per sequence, |x|

  // Packed row maps; all empty for the dense layout.
  std::vector<std::size_t> dec_offset;  // per step
  std::vector<std::size_t> dec_rank;    // per sequence
  std::size_t dec_rows = 0;
  std::vector<std::size_t> enc_offset;  // per position
  std::vector<std::size_t> enc_rank;    // per sequence
  std::size_t enc_rows = 0;

  bool packed() const noexcept { return !dec_offset.empty(); }
  std::size_t pair_index(std::size_t b, std::size_t t, std::size_t j) const {
    return (b * max_steps + t) * max_positions + j;
  }
  std::size_t dec_row(std::size_t b, std::size_t t) const {
    return packed() ? dec_offset[t] + dec_rank[b] : t * batch + b;
  }
  std::size_t enc_row(std::size_t b, std::size_t j) const {
    return packed() ? enc_offset[j] + enc_rank[b] : j * batch + b;
  }
  std::size_t dec_row_count() const { return packed() ? dec_rows : max_steps * batch; }
  std::size_t enc_row_count() const { return packed() ? enc_rows : max_positions * batch; }
  void validate() const;
};

/// log softmax(W_o tanh(dec[t] + enc[j]) + b_o)[target(b, t)], shape (B, T, J).
/// `targets` is B x T row-major.
ad::Tensor pairwise_emission(const ad::Tensor& dec_proj, const ad::Tensor& enc_proj, const ad::Tensor& out_weight,
                             const ad::Tensor& out_bias, const BatchLayout& layout,
                             const std::vector<SegmentId>& targets);

/// queries[t] . keys[j], shape (B, T, J).
ad::Tensor pairwise_scores(const ad::Tensor& queries, const ad::Tensor& keys, const BatchLayout& layout);

/// Exact log marginal over monotone alignments, shape (B).
///   alpha(0, j) = E(0, j) + S(0, j) - R(0, 0)
///   alpha(t, j) = E(t, j) + S(t, j) + logsumexp_{i <= j} (alpha(t-1, i) - R(t, i))
/// with R(t, i) = logsumexp_{k >= i} S(t, k). Gradients come from the
/// forward-backward posteriors.
ad::Tensor monotonic_marginal(const ad::Tensor& emission, const ad::Tensor& scores, const BatchLayout& layout);

}  // namespace reflex
