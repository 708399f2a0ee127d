// SPDX-License-Identifier: Apache-2.0
/**
 * @file   phylo.hpp
 * @brief  Distance matrices, neighbor joining, Newick I/O and the
 *         generalized quartet distance.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reflex {

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  /// Throws ArgumentError unless `values` is n x n, symmetric, non-negative
  /// with a zero diagonal, and taxa are unique.
  DistanceMatrix(std::vector<std::string> taxa, std::vector<double> values);

  std::size_t size() const noexcept { return taxa_.size(); }
  const std::vector<std::string>& taxa() const noexcept { return taxa_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * taxa_.size() + j]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<std::string> taxa_;
  std::vector<double> values_;
};

/// d(i, j) = 1 - cos(v_i, v_j), clamped to >= 0 against rounding. Throws on a
/// zero vector (naming the taxon) or mismatched dimensions.
DistanceMatrix cosine_distance_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& embeddings);

/// Unrooted tree. Leaves carry unique labels; internal nodes are unlabeled.
class PhyloTree {
 public:
  struct Edge {
    std::size_t to = 0;
    std::optional<double> length;
  };

  std::size_t add_node(std::string label = {});
  void add_edge(std::size_t a, std::size_t b, std::optional<double> length = std::nullopt);

  std::size_t node_count() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t node) const { return labels_.at(node); }
  bool is_leaf(std::size_t node) const { return !labels_.at(node).empty(); }
  const std::vector<Edge>& neighbors(std::size_t node) const { return adjacency_.at(node); }

  /// Leaf labels, sorted.
  std::vector<std::string> leaf_labels() const;
  std::optional<std::size_t> find_leaf(std::string_view label) const;

  /// Non-trivial bipartitions, one per internal edge. Each split is a
  /// membership vector over `leaf_labels()`, normalised so that the first
  /// leaf is on the `false` side.
  std::vector<std::vector<bool>> splits() const;

  /// Throws ArgumentError when the graph is not a tree, labels repeat, or a
  /// labeled node is internal.
  void validate() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<Edge>> adjacency_;
};

/// Same leaf set and same set of splits.
bool same_topology(const PhyloTree& a, const PhyloTree& b);

/// Saitou-Nei neighbor joining. Q ties go to the pair whose clusters'
/// smallest taxa names are lexicographically first. Negative branch lengths
/// are clamped to 0 and the difference moves to the sibling branch.
PhyloTree neighbor_join(const DistanceMatrix& d);

/// Parses one Newick tree. Degree-2 nodes (including a binary root) are
/// suppressed. Throws ParseError whose location is a byte offset.
PhyloTree parse_newick(std::string_view text);
/// Canonical Newick text: children ordered by their smallest leaf label.
std::string emit_newick(const PhyloTree& tree, bool with_lengths = true);

struct QuartetCounts {
  std::size_t differing = 0;            // resolved in both, different butterflies
  std::size_t resolved_reference = 0;   // resolved in the reference
  std::size_t total = 0;                // C(n, 4)
  double distance() const {
    return resolved_reference == 0 ? 0.0 : static_cast<double>(differing) / static_cast<double>(resolved_reference);
  }
};

/// Throws ArgumentError listing the symmetric difference when leaf sets differ.
QuartetCounts quartet_counts(const PhyloTree& candidate, const PhyloTree& reference);
double generalized_quartet_distance(const PhyloTree& candidate, const PhyloTree& reference);

}  // namespace reflex
