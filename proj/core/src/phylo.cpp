// SPDX-License-Identifier: Apache-2.0
#include "reflex/phylo.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "reflex/errors.hpp"

namespace reflex {

DistanceMatrix::DistanceMatrix(std::vector<std::string> taxa, std::vector<double> values)
    : taxa_(std::move(taxa)), values_(std::move(values)) {
  const std::size_t n = taxa_.size();
  if (values_.size() != n * n) throw ArgumentError(fmt::format("distance matrix needs {} x {} values", n, n));
  std::set<std::string> seen;
  for (const auto& t : taxa_) {
    if (!seen.insert(t).second) throw ArgumentError(fmt::format("duplicate taxon '{}'", t));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != 0.0) throw ArgumentError(fmt::format("distance matrix diagonal at '{}' is not zero", taxa_[i]));
    for (std::size_t j = 0; j < n; ++j) {
      if (!(at(i, j) >= 0.0) || at(i, j) != at(j, i)) {
        throw ArgumentError(fmt::format("distance between '{}' and '{}' is negative or asymmetric", taxa_[i], taxa_[j]));
      }
    }
  }
}

DistanceMatrix cosine_distance_matrix(const std::vector<std::pair<std::string, std::vector<double>>>& embeddings) {
  const std::size_t n = embeddings.size();
  std::vector<std::string> taxa;
  std::vector<double> norms;
  for (const auto& [name, v] : embeddings) {
    if (v.size() != embeddings.front().second.size()) {
      throw ArgumentError(fmt::format("embedding of '{}' has dimension {}, expected {}", name, v.size(),
                                      embeddings.front().second.size()));
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm == 0.0) throw ArgumentError(fmt::format("embedding of '{}' is the zero vector", name));
    taxa.push_back(name);
    norms.push_back(norm);
  }
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = embeddings[i].second;
      const auto& b = embeddings[j].second;
      const double cos = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (norms[i] * norms[j]);
      d[i * n + j] = d[j * n + i] = std::max(0.0, 1.0 - cos);
    }
  }
  return DistanceMatrix(std::move(taxa), std::move(d));
}

std::size_t PhyloTree::add_node(std::string label) {
  labels_.push_back(std::move(label));
  adjacency_.emplace_back();
  return labels_.size() - 1;
}

void PhyloTree::add_edge(std::size_t a, std::size_t b, std::optional<double> length) {
  if (a >= node_count() || b >= node_count() || a == b) throw ArgumentError("add_edge: bad endpoints");
  adjacency_[a].push_back({b, length});
  adjacency_[b].push_back({a, length});
}

std::vector<std::string> PhyloTree::leaf_labels() const {
  std::vector<std::string> out;
  for (const auto& l : labels_) {
    if (!l.empty()) out.push_back(l);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::size_t> PhyloTree::find_leaf(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::vector<std::vector<bool>> PhyloTree::splits() const {
  const auto leaves = leaf_labels();
  std::vector<std::size_t> leaf_index(node_count(), 0);
  for (std::size_t v = 0; v < node_count(); ++v) {
    if (is_leaf(v)) {
      leaf_index[v] = static_cast<std::size_t>(std::lower_bound(leaves.begin(), leaves.end(), labels_[v]) - leaves.begin());
    }
  }
  std::vector<std::vector<bool>> out;
  std::vector<std::size_t> stack;
  for (std::size_t u = 0; u < node_count(); ++u) {
    if (is_leaf(u)) continue;
    for (const auto& e : adjacency_[u]) {
      const std::size_t v = e.to;
      if (v < u || is_leaf(v)) continue;
      std::vector<bool> side(leaves.size(), false);
      std::vector<bool> seen(node_count(), false);
      seen[u] = seen[v] = true;
      stack.assign(1, v);
      while (!stack.empty()) {
        const std::size_t w = stack.back();
        stack.pop_back();
        if (is_leaf(w)) side[leaf_index[w]] = true;
        for (const auto& f : adjacency_[w]) {
          if (!seen[f.to]) {
            seen[f.to] = true;
            stack.push_back(f.to);
          }
        }
      }
      if (!side.empty() && side[0]) side.flip();
      out.push_back(std::move(side));
    }
  }
  return out;
}

void PhyloTree::validate() const {
  const std::size_t n = node_count();
  if (n == 0) throw ArgumentError("tree has no nodes");
  std::size_t edges = 0;
  for (const auto& adj : adjacency_) edges += adj.size();
  if (edges / 2 != n - 1) throw ArgumentError("tree must have exactly nodes - 1 edges");
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t w = stack.back();
    stack.pop_back();
    for (const auto& e : adjacency_[w]) {
      if (!seen[e.to]) {
        seen[e.to] = true;
        ++reached;
        stack.push_back(e.to);
      }
    }
  }
  if (reached != n) throw ArgumentError("tree is not connected");
  std::set<std::string> labels;
  for (std::size_t v = 0; v < n; ++v) {
    if (labels_[v].empty()) continue;
    if (!labels.insert(labels_[v]).second) throw ArgumentError(fmt::format("duplicate leaf label '{}'", labels_[v]));
    if (n > 1 && adjacency_[v].size() != 1) throw ArgumentError(fmt::format("labeled node '{}' is not a leaf", labels_[v]));
  }
}

bool same_topology(const PhyloTree& a, const PhyloTree& b) {
  if (a.leaf_labels() != b.leaf_labels()) return false;
  auto sa = a.splits();
  auto sb = b.splits();
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  return sa == sb;
}

PhyloTree neighbor_join(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  if (n < 3) throw ArgumentError(fmt::format("neighbor joining needs at least 3 taxa, got {}", n));
  PhyloTree tree;
  struct Cluster {
    std::size_t node;
    std::string key;  // smallest taxon name inside
  };
  std::vector<Cluster> active;
  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    active.push_back({tree.add_node(d.taxa()[i]), d.taxa()[i]});
    for (std::size_t j = 0; j < n; ++j) dist[i][j] = d.at(i, j);
  }

  while (active.size() > 3) {
    const std::size_t m = active.size();
    std::vector<double> r(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) r[i] = std::accumulate(dist[i].begin(), dist[i].end(), 0.0);
    std::size_t bi = 0;
    std::size_t bj = 1;
    double best = 0.0;
    bool have = false;
    auto key_of = [&](std::size_t i, std::size_t j) {
      return std::minmax(active[i].key, active[j].key);
    };
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double q = static_cast<double>(m - 2) * dist[i][j] - r[i] - r[j];
        const double tol = 1e-12 * std::max(1.0, std::abs(q));
        if (!have || q < best - tol || (std::abs(q - best) <= tol && key_of(i, j) < key_of(bi, bj))) {
          best = q;
          bi = i;
          bj = j;
          have = true;
        }
      }
    }
    const double dij = dist[bi][bj];
    double li = dij / 2.0 + (r[bi] - r[bj]) / (2.0 * static_cast<double>(m - 2));
    double lj = dij - li;
    if (li < 0.0) {
      lj += li;
      li = 0.0;
    } else if (lj < 0.0) {
      li += lj;
      lj = 0.0;
    }
    const std::size_t u = tree.add_node();
    tree.add_edge(u, active[bi].node, li);
    tree.add_edge(u, active[bj].node, lj);

    std::vector<double> du(m);
    for (std::size_t k = 0; k < m; ++k) du[k] = (dist[bi][k] + dist[bj][k] - dij) / 2.0;
    du[bi] = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      dist[bi][k] = du[k];
      dist[k][bi] = du[k];
    }
    active[bi] = {u, std::min(active[bi].key, active[bj].key)};
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  const std::size_t center = tree.add_node();
  for (std::size_t a = 0; a < 3; ++a) {
    const std::size_t b = (a + 1) % 3;
    const std::size_t c = (a + 2) % 3;
    const double len = (dist[a][b] + dist[a][c] - dist[b][c]) / 2.0;
    tree.add_edge(center, active[a].node, std::max(0.0, len));
  }
  return tree;
}

namespace {

// 0: ab|cd, 1: ac|bd, 2: ad|bc, -1: unresolved.
int butterfly(const std::vector<std::vector<bool>>& splits, std::size_t a, std::size_t b, std::size_t c,
              std::size_t d) {
  for (const auto& s : splits) {
    if (s[a] == s[b] && s[c] == s[d] && s[a] != s[c]) return 0;
    if (s[a] == s[c] && s[b] == s[d] && s[a] != s[b]) return 1;
    if (s[a] == s[d] && s[b] == s[c] && s[a] != s[b]) return 2;
  }
  return -1;
}

}  // namespace

QuartetCounts quartet_counts(const PhyloTree& candidate, const PhyloTree& reference) {
  const auto lc = candidate.leaf_labels();
  const auto lr = reference.leaf_labels();
  if (lc != lr) {
    std::vector<std::string> diff;
    std::set_symmetric_difference(lc.begin(), lc.end(), lr.begin(), lr.end(), std::back_inserter(diff));
    throw ArgumentError(fmt::format("leaf sets differ: {}", fmt::join(diff, ", ")));
  }
  const auto sc = candidate.splits();
  const auto sr = reference.splits();
  const std::size_t n = lc.size();
  QuartetCounts out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        for (std::size_t d = c + 1; d < n; ++d) {
          ++out.total;
          const int r = butterfly(sr, a, b, c, d);
          if (r < 0) continue;
          ++out.resolved_reference;
          const int q = butterfly(sc, a, b, c, d);
          if (q >= 0 && q != r) ++out.differing;
        }
      }
    }
  }
  return out;
}

double generalized_quartet_distance(const PhyloTree& candidate, const PhyloTree& reference) {
  return quartet_counts(candidate, reference).distance();
}

}  // namespace reflex
