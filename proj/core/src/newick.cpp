// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>

#include "reflex/errors.hpp"
#include "reflex/phylo.hpp"

namespace reflex {
namespace {

constexpr std::string_view kSpecial = "()[]':;, \t\r\n";

struct RawNode {
  std::string label;
  std::map<std::size_t, std::optional<double>> edges;
};

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : s_(text) {}

  std::vector<RawNode> parse() {
    skip_space();
    if (pos_ >= s_.size()) fail("empty Newick text");
    subtree();
    length();
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != ';') fail(pos_ < s_.size() && s_[pos_] == ')' ? "unbalanced ')'" : "expected ';'");
    ++pos_;
    skip_space();
    if (pos_ != s_.size()) fail("unexpected text after ';'");
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(fmt::format("Newick: {} at byte {}", what, pos_), pos_);
  }

  void skip_space() {
    while (pos_ < s_.size()) {
      const char ch = s_[pos_];
      if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
        ++pos_;
      } else if (ch == '[') {
        const auto end = s_.find(']', pos_);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 1;
      } else {
        break;
      }
    }
  }

  std::size_t new_node(std::string label = {}) {
    nodes_.push_back({std::move(label), {}});
    return nodes_.size() - 1;
  }

  void link(std::size_t a, std::size_t b, std::optional<double> len) {
    nodes_[a].edges[b] = len;
    nodes_[b].edges[a] = len;
  }

  std::string label() {
    skip_space();
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      const std::size_t start = pos_;
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) {
          pos_ = start;
          fail("unterminated quoted label");
        }
        if (s_[pos_] == '\'') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        out.push_back(s_[pos_++]);
      }
      return out;
    }
    while (pos_ < s_.size() && kSpecial.find(s_[pos_]) == std::string_view::npos) out.push_back(s_[pos_++]);
    return out;
  }

  std::optional<double> length() {
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != ':') return std::nullopt;
    ++pos_;
    skip_space();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (ec != std::errc()) fail("malformed branch length");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return value;
  }

  std::size_t subtree() {
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      const std::size_t node = new_node();
      while (true) {
        const std::size_t child = subtree();
        link(node, child, length());
        skip_space();
        if (pos_ >= s_.size()) fail("unbalanced '('");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail(s_[pos_] == ';' ? "unbalanced '('" : "expected ',' or ')'");
      }
      label();  // internal labels (support values) are dropped
      return node;
    }
    skip_space();
    const std::size_t start = pos_;
    std::string name = label();
    if (name.empty()) {
      if (pos_ >= s_.size()) fail("unbalanced '('");
      fail(s_[pos_] == ')' ? "unbalanced ')'" : "expected a leaf label");
    }
    if (!seen_.insert(name).second) {
      pos_ = start;
      fail(fmt::format("duplicate label '{}'", name));
    }
    return new_node(std::move(name));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<RawNode> nodes_;
  std::set<std::string> seen_;
};

std::optional<double> join_lengths(std::optional<double> a, std::optional<double> b) {
  if (!a) return b;
  if (!b) return a;
  return *a + *b;
}

bool needs_quotes(const std::string& label) {
  return label.find_first_of(kSpecial) != std::string::npos;
}

std::string quote(const std::string& label) {
  if (!needs_quotes(label)) return label;
  std::string out = "'";
  for (char ch : label) {
    if (ch == '\'') out.push_back('\'');
    out.push_back(ch);
  }
  out.push_back('\'');
  return out;
}

}  // namespace

PhyloTree parse_newick(std::string_view text) {
  auto raw = NewickParser(text).parse();
  std::vector<bool> removed(raw.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t v = 0; v < raw.size(); ++v) {
      if (removed[v] || !raw[v].label.empty()) continue;
      auto& edges = raw[v].edges;
      if (edges.size() == 2) {
        auto it = edges.begin();
        const auto [a, la] = *it++;
        const auto [b, lb] = *it;
        raw[a].edges.erase(v);
        raw[b].edges.erase(v);
        const auto len = join_lengths(la, lb);
        raw[a].edges[b] = len;
        raw[b].edges[a] = len;
      } else if (edges.size() <= 1) {
        for (const auto& [a, len] : edges) raw[a].edges.erase(v);
      } else {
        continue;
      }
      edges.clear();
      removed[v] = true;
      changed = true;
    }
  }
  PhyloTree tree;
  std::vector<std::size_t> id(raw.size(), 0);
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (!removed[v]) id[v] = tree.add_node(raw[v].label);
  }
  for (std::size_t v = 0; v < raw.size(); ++v) {
    if (removed[v]) continue;
    for (const auto& [u, len] : raw[v].edges) {
      if (u > v) tree.add_edge(id[v], id[u], len);
    }
  }
  return tree;
}

std::string emit_newick(const PhyloTree& tree, bool with_lengths) {
  const std::size_t n = tree.node_count();
  if (n == 0) return ";";
  const auto leaves = tree.leaf_labels();
  if (leaves.empty()) throw ArgumentError("cannot write a tree without leaves");
  const std::size_t first = *tree.find_leaf(leaves.front());
  if (n == 1) return quote(leaves.front()) + ";";

  auto edge_text = [&](std::optional<double> len) {
    return with_lengths && len ? fmt::format(":{}", *len) : std::string();
  };

  // Smallest leaf label below each node when hanging from `parent`.
  std::function<std::string(std::size_t, std::size_t)> min_label = [&](std::size_t v, std::size_t parent) {
    if (tree.is_leaf(v)) return tree.label(v);
    std::string best;
    for (const auto& e : tree.neighbors(v)) {
      if (e.to == parent) continue;
      auto m = min_label(e.to, v);
      if (best.empty() || m < best) best = std::move(m);
    }
    return best;
  };

  std::function<std::string(std::size_t, std::size_t)> write = [&](std::size_t v, std::size_t parent) {
    if (tree.is_leaf(v) && parent != n) return quote(tree.label(v));
    std::vector<std::pair<std::string, std::string>> parts;
    for (const auto& e : tree.neighbors(v)) {
      if (e.to == parent) continue;
      parts.emplace_back(min_label(e.to, v), write(e.to, v) + edge_text(e.length));
    }
    std::sort(parts.begin(), parts.end());
    std::string out = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) out += ",";
      out += parts[i].second;
    }
    return out + ")";
  };

  // Root on the node next to the smallest leaf so the text is canonical.
  const std::size_t root = tree.neighbors(first).front().to;
  if (tree.is_leaf(root)) {
    const auto len = tree.neighbors(first).front().length;
    return fmt::format("({}{},{});", quote(tree.label(first)), edge_text(len), quote(tree.label(root)));
  }
  return write(root, n) + ";";
}

}  // namespace reflex
