// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>
#include <sstream>

#include "corpora.hpp"
#include "reflex/errors.hpp"
#include "reflex/synthetic.hpp"

using namespace reflex;

namespace {

std::vector<std::string> word(const std::string& text) { return split_segments(text); }

}  // namespace

TEST_CASE("rule parsing") {
  const auto r = parse_rule("t -> d / {a e} _ #");
  CHECK(r.target == word("t"));
  CHECK(r.replacement == word("d"));
  REQUIRE(r.left);
  CHECK(r.left->symbols == std::set<std::string>{"a", "e"});
  REQUIRE(r.right);
  CHECK(r.right->boundary);
  CHECK(parse_rule("s -> ∅").replacement.empty());
  CHECK(parse_rule("s -> ").replacement.empty());
  CHECK_THROWS_AS(parse_rule("s d"), ArgumentError);
  CHECK_THROWS_AS(parse_rule("s -> z / a b"), ArgumentError);
  CHECK_THROWS_AS(parse_rule("s -> </s>"), ArgumentError);
}

TEST_CASE("contexts read the input of the pass") {
  // Intervocalic voicing: both t's qualify on the original word.
  CHECK(apply_rule(parse_rule("t -> d / {a} _ {a}"), word("a t a t a")) == word("a d a d a"));
  CHECK(apply_rule(parse_rule("p -> f / # _"), word("p a p")) == word("f a p"));
  CHECK(apply_rule(parse_rule("s -> ∅ / _ #"), word("s a s")) == word("s a"));
  // A rewrite does not feed the same pass.
  CHECK(apply_rule(parse_rule("a -> b / a _"), word("a a a")) == word("a b b"));
  CHECK(apply_rules({parse_rule("a -> o"), parse_rule("o -> u")}, word("a o")) == word("u u"));
}

TEST_CASE("rule files group rules by language") {
  std::istringstream in("# c\n[X]\na -> o\n[Y]\n[Z]\nk -> tʃ / _ {e i}\n");
  const auto rules = parse_rule_file(in);
  REQUIRE(rules.size() == 3);
  CHECK(rules[0].first == "X");
  CHECK(rules[1].second.empty());
  CHECK(rules[2].second.size() == 1);
  std::istringstream bad("a -> o\n");
  CHECK_THROWS_AS(parse_rule_file(bad), ParseError);
}

TEST_CASE("generated corpus applies every language's rules to every word") {
  const auto rules = testing::three_language_rules();
  const auto lexicon = random_lexicon(LexiconSpec{}, 40, 9);
  const auto corpus = generate_synthetic(lexicon, rules, 1);
  CHECK(corpus.size() == lexicon.size() * rules.size());
  std::set<std::pair<std::string, std::string>> expected;
  for (const auto& [lang, list] : rules) {
    for (const auto& w : lexicon) {
      const auto out = apply_rules(list, w);
      std::string a, b;
      for (const auto& s : w) a += s + " ";
      for (const auto& s : out) b += s + " ";
      expected.insert({lang + "|" + a, b});
    }
  }
  for (const auto& p : corpus.pairs()) {
    std::string a = corpus.language_name(p.language) + "|" + corpus.input_vocab().render(p.etymon) + " ";
    std::string b = corpus.output_vocab().render(p.reflex) + " ";
    CHECK(expected.count({a, b}) == 1);
  }
  // Same seed, same corpus.
  CHECK(generate_synthetic(lexicon, rules, 1).pairs() == corpus.pairs());
}

TEST_CASE("random lexicon draws distinct CV(C) words") {
  const auto lex = random_lexicon(LexiconSpec{}, 200, 5);
  CHECK(std::set<std::vector<std::string>>(lex.begin(), lex.end()).size() == 200);
  CHECK(random_lexicon(LexiconSpec{}, 200, 5) == lex);
  for (const auto& w : lex) {
    CHECK(!w.empty());
    CHECK(w.size() <= 9);
  }
}
