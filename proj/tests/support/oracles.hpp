// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used as test oracles.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/model.hpp"
#include "reflex/phylo.hpp"
#include "reflex/random.hpp"
#include "reflex/tensor.hpp"

namespace reflex::testing {

/// Every non-decreasing position sequence of length `steps` over
/// [0, positions), in lexicographic order.
std::vector<std::vector<std::size_t>> monotone_alignments(std::size_t steps, std::size_t positions);

/// Joint log score of one alignment of the chain (EOS step included).
double alignment_log_score(const AlignmentPotentials& p, const std::vector<std::size_t>& path);

/// log sum over all monotone alignments, by enumeration.
double brute_force_log_marginal(const AlignmentPotentials& p);
/// Best alignment by enumeration; ties keep the lexicographically first.
AlignmentPath brute_force_viterbi(const AlignmentPotentials& p);

/// Full-table edit distance.
std::size_t reference_levenshtein(const SegmentSeq& a, const SegmentSeq& b);

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "input i [k]: analytic vs numeric"
};

/// Central finite differences of the scalar returned by `loss` with respect
/// to every element of every tensor in `inputs`, compared with reverse mode.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradCheck check_gradients(const std::function<ad::Tensor()>& loss, const std::vector<ad::Tensor>& inputs,
                          double h = 1e-5, double floor = 1e-4);

/// Random unrooted binary tree on leaves t0..t{n-1}, grown by inserting each
/// leaf on a uniformly chosen edge. Branch lengths uniform on [0.1, 1).
PhyloTree random_binary_tree(std::size_t n, Rng& rng);
/// The same tree with `k` random internal edges contracted (multifurcations).
PhyloTree contract_internal_edges(const PhyloTree& tree, std::size_t k, Rng& rng);

/// Leaf-to-leaf path lengths (edge lengths, missing lengths count 1), taxa in
/// sorted label order.
DistanceMatrix path_length_matrix(const PhyloTree& tree);

/// Quartet counts from the four-point condition on unit-length path
/// distances: a quartet is resolved as ab|cd when d(a,b) + d(c,d) is strictly
/// the smallest of the three pair sums.
QuartetCounts four_point_quartets(const PhyloTree& candidate, const PhyloTree& reference);

}  // namespace reflex::testing
