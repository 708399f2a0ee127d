// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synthetic.hpp
 * @brief  Rule-derived synthetic cognate corpora.
 *
 * Rule file format, one rule per line:
 *
 *     [L1]                      start the rule list of language L1
 *     t -> d / {a e i o u} _ {a e i o u}
 *     u -> ∅ / _ #              deletion (an empty right-hand side works too)
 *     a -> o                    context-free
 *
 * Contexts are a single segment, a brace set of segments, or '#' for the word
 * boundary. Lines starting with '#' are comments. A language header with no
 * rules is an identity language.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reflex/corpus.hpp"

namespace reflex {

struct ContextPredicate {
  bool boundary = false;         // matches the word edge only
  std::set<std::string> symbols;  // used when !boundary

  bool operator==(const ContextPredicate&) const = default;
};

struct RewriteRule {
  std::vector<std::string> target;
  std::vector<std::string> replacement;  // empty = deletion
  std::optional<ContextPredicate> left;
  std::optional<ContextPredicate> right;

  bool operator==(const RewriteRule&) const = default;
};

using LanguageRules = std::vector<std::pair<std::string, std::vector<RewriteRule>>>;

RewriteRule parse_rule(const std::string& line);
LanguageRules parse_rule_file(std::istream& in);
LanguageRules load_rule_file(const std::filesystem::path& path);

/// One left-to-right, non-overlapping pass of `rule`. Contexts are read from
/// the input of the pass, so rewrites inside the pass do not feed each other.
std::vector<std::string> apply_rule(const RewriteRule& rule, const std::vector<std::string>& word);
/// Applies the rules in list order, one full pass each.
std::vector<std::string> apply_rules(const std::vector<RewriteRule>& rules, std::vector<std::string> word);

/// Every (proto word, language) combination becomes one pair; the pair order
/// is a seeded shuffle so languages interleave in the emitted corpus.
Corpus generate_synthetic(const std::vector<std::vector<std::string>>& proto_lexicon,
                          const LanguageRules& language_rules, std::uint64_t seed);

struct LexiconSpec {
  std::vector<std::string> consonants{"p", "t", "k", "b", "d", "g", "s", "z", "m", "n", "r", "l"};
  std::vector<std::string> vowels{"a", "e", "i", "o", "u"};
  std::size_t min_syllables = 1;
  std::size_t max_syllables = 3;
  /// Probability that a syllable gets a coda consonant.
  double coda_probability = 0.2;
};

/// `count` distinct CV(C)-syllable proto words.
std::vector<std::vector<std::string>> random_lexicon(const LexiconSpec& spec, std::size_t count,
                                                     std::uint64_t seed);

std::vector<std::vector<std::string>> load_lexicon(const std::filesystem::path& path);

}  // namespace reflex
