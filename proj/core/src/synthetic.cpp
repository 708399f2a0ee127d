// SPDX-License-Identifier: Apache-2.0
#include "reflex/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>

#include "reflex/errors.hpp"
#include "reflex/random.hpp"

namespace reflex {
namespace {

constexpr std::string_view kEmptySet = "∅";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<ContextPredicate> parse_context(const std::string& text) {
  const auto t = trim(text);
  if (t.empty()) return std::nullopt;
  ContextPredicate pred;
  if (t == "#") {
    pred.boundary = true;
    return pred;
  }
  if (t.front() == '{') {
    if (t.back() != '}') throw ArgumentError(fmt::format("unterminated segment set '{}'", t));
    for (auto& s : split_segments(t.substr(1, t.size() - 2))) {
      if (s != ",") pred.symbols.insert(s.back() == ',' ? s.substr(0, s.size() - 1) : s);
    }
    if (pred.symbols.empty()) throw ArgumentError("empty segment set in rule context");
    return pred;
  }
  auto segs = split_segments(t);
  if (segs.size() != 1) throw ArgumentError(fmt::format("context '{}' must be one segment, a set, or '#'", t));
  pred.symbols.insert(segs[0]);
  return pred;
}

bool context_matches(const std::optional<ContextPredicate>& pred, const std::vector<std::string>& word,
                     std::ptrdiff_t pos) {
  if (!pred) return true;
  const bool outside = pos < 0 || pos >= static_cast<std::ptrdiff_t>(word.size());
  if (pred->boundary) return outside;
  return !outside && pred->symbols.count(word[static_cast<std::size_t>(pos)]) > 0;
}

}  // namespace

RewriteRule parse_rule(const std::string& line) {
  const auto arrow = line.find("->");
  if (arrow == std::string::npos) throw ArgumentError(fmt::format("rule '{}' has no '->'", line));
  RewriteRule rule;
  rule.target = split_segments(trim(line.substr(0, arrow)));
  if (rule.target.empty()) throw ArgumentError(fmt::format("rule '{}' has an empty target", line));

  std::string rest = line.substr(arrow + 2);
  std::string env;
  if (auto slash = rest.find('/'); slash != std::string::npos) {
    env = rest.substr(slash + 1);
    rest = rest.substr(0, slash);
  }
  for (auto& s : split_segments(trim(rest))) {
    if (s == kEmptySet) continue;
    if (Vocabulary::is_reserved_symbol(s)) {
      throw ArgumentError(fmt::format("rule '{}' introduces reserved symbol '{}'", trim(line), s));
    }
    rule.replacement.push_back(s);
  }
  if (!env.empty()) {
    const auto us = env.find('_');
    if (us == std::string::npos) throw ArgumentError(fmt::format("rule '{}' has no '_' in its environment", line));
    rule.left = parse_context(env.substr(0, us));
    rule.right = parse_context(env.substr(us + 1));
  }
  return rule;
}

LanguageRules parse_rule_file(std::istream& in) {
  LanguageRules out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ParseError(fmt::format("line {}: bad language header", line_no), line_no);
      out.emplace_back(t.substr(1, t.size() - 2), std::vector<RewriteRule>{});
      continue;
    }
    if (out.empty()) throw ParseError(fmt::format("line {}: rule before any [language] header", line_no), line_no);
    try {
      out.back().second.push_back(parse_rule(t));
    } catch (const ArgumentError& e) {
      throw ParseError(fmt::format("line {}: {}", line_no, e.what()), line_no);
    }
  }
  if (out.empty()) throw ParseError("rule file defines no languages", line_no);
  return out;
}

LanguageRules load_rule_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open rule file '{}'", path.string()));
  return parse_rule_file(in);
}

std::vector<std::string> apply_rule(const RewriteRule& rule, const std::vector<std::string>& word) {
  std::vector<std::string> out;
  const std::size_t n = word.size();
  const std::size_t m = rule.target.size();
  std::size_t i = 0;
  while (i < n) {
    bool hit = i + m <= n && std::equal(rule.target.begin(), rule.target.end(), word.begin() + static_cast<std::ptrdiff_t>(i));
    hit = hit && context_matches(rule.left, word, static_cast<std::ptrdiff_t>(i) - 1) &&
          context_matches(rule.right, word, static_cast<std::ptrdiff_t>(i + m));
    if (hit) {
      out.insert(out.end(), rule.replacement.begin(), rule.replacement.end());
      i += m;
    } else {
      out.push_back(word[i++]);
    }
  }
  return out;
}

std::vector<std::string> apply_rules(const std::vector<RewriteRule>& rules, std::vector<std::string> word) {
  for (const auto& r : rules) word = apply_rule(r, word);
  return word;
}

Corpus generate_synthetic(const std::vector<std::vector<std::string>>& proto_lexicon,
                          const LanguageRules& language_rules, std::uint64_t seed) {
  if (proto_lexicon.empty()) throw ArgumentError("generate_synthetic: empty proto lexicon");
  if (language_rules.empty()) throw ArgumentError("generate_synthetic: no languages");
  for (const auto& [lang, rules] : language_rules) {
    for (const auto& r : rules) {
      if (r.target.empty()) throw ArgumentError(fmt::format("language {}: rule with empty target", lang));
      for (const auto& s : r.replacement) {
        if (Vocabulary::is_reserved_symbol(s)) {
          throw ArgumentError(fmt::format("language {}: rule introduces reserved symbol '{}'", lang, s));
        }
      }
    }
  }

  struct Row {
    std::size_t word;
    std::size_t language;
    std::vector<std::string> reflex;
  };
  std::vector<Row> rows;
  for (std::size_t w = 0; w < proto_lexicon.size(); ++w) {
    if (proto_lexicon[w].empty()) throw ArgumentError(fmt::format("proto word {} is empty", w));
    for (std::size_t l = 0; l < language_rules.size(); ++l) {
      auto reflex = apply_rules(language_rules[l].second, proto_lexicon[w]);
      if (reflex.empty()) {
        throw ArgumentError(fmt::format("rules of {} delete every segment of proto word {}",
                                        language_rules[l].first, w));
      }
      rows.push_back({w, l, std::move(reflex)});
    }
  }

  Rng rng(seed);
  rng.shuffle(rows);
  Corpus corpus;
  for (const auto& [lang, rules] : language_rules) corpus.add_language(lang);
  for (const auto& row : rows) corpus.add_pair(language_rules[row.language].first, proto_lexicon[row.word], row.reflex);
  return corpus;
}

std::vector<std::vector<std::string>> random_lexicon(const LexiconSpec& spec, std::size_t count,
                                                     std::uint64_t seed) {
  if (spec.consonants.empty() || spec.vowels.empty() || spec.min_syllables == 0 ||
      spec.max_syllables < spec.min_syllables) {
    throw ArgumentError("random_lexicon: bad lexicon spec");
  }
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<std::vector<std::string>> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 10)) throw ArgumentError("random_lexicon: cannot draw enough distinct words");
    const std::size_t syllables = spec.min_syllables + rng.index(spec.max_syllables - spec.min_syllables + 1);
    std::vector<std::string> word;
    for (std::size_t s = 0; s < syllables; ++s) {
      word.push_back(spec.consonants[rng.index(spec.consonants.size())]);
      word.push_back(spec.vowels[rng.index(spec.vowels.size())]);
      if (rng.uniform() < spec.coda_probability) word.push_back(spec.consonants[rng.index(spec.consonants.size())]);
    }
    if (seen.insert(word).second) out.push_back(std::move(word));
  }
  return out;
}

std::vector<std::vector<std::string>> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open lexicon '{}'", path.string()));
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.push_back(split_segments(t));
  }
  if (out.empty()) throw ParseError("lexicon is empty", 0);
  return out;
}

}  // namespace reflex
