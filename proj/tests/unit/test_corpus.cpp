// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>
#include <sstream>

#include "corpora.hpp"
#include "reflex/corpus.hpp"
#include "reflex/errors.hpp"

using namespace reflex;

namespace {

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

}  // namespace

TEST_CASE("output vocabulary reserves PAD, BOS, EOS") {
  const auto v = Vocabulary::with_reserved();
  CHECK(v.size() == 3);
  CHECK(v.symbol(Vocabulary::kPad) == "<pad>");
  CHECK(v.symbol(Vocabulary::kBos) == "<s>");
  CHECK(v.symbol(Vocabulary::kEos) == "</s>");
  CHECK(v.has_reserved());
}

TEST_CASE("interning is idempotent and encode/render round trip") {
  Vocabulary v;
  const auto a = v.intern("tʃ");
  CHECK(v.intern("tʃ") == a);
  v.intern("a");
  const auto seq = v.encode("tʃ a tʃ");
  CHECK(seq == SegmentSeq{a, 1, a});
  CHECK(v.render(seq) == "tʃ a tʃ");
  CHECK_THROWS_AS(v.id("zz"), ArgumentError);
  CHECK_THROWS_AS(v.intern("a b"), ArgumentError);
}

TEST_CASE("suprasegmental marks are flagged") {
  CHECK(is_suprasegmental_symbol("ˈ"));
  CHECK(is_suprasegmental_symbol("ˌ"));
  CHECK_FALSE(is_suprasegmental_symbol("a"));
  const auto c = parse("L\ta\tˈ a\n");
  const auto stress = c.output_vocab().id("ˈ");
  CHECK(c.output_vocab().is_suprasegmental(stress));
  CHECK_FALSE(c.output_vocab().is_suprasegmental(c.output_vocab().id("a")));
}

TEST_CASE("parse skips comments and blank lines and keeps order") {
  const auto c = parse("# header\n\nPL\tm ɨ l o\tm ɨ w o\nRU\tm ɨ l o\tm ɨ l o\r\n");
  REQUIRE(c.size() == 2);
  CHECK(c.languages() == std::vector<std::string>{"PL", "RU"});
  CHECK(c.input_vocab().render(c.pairs()[0].etymon) == "m ɨ l o");
  CHECK(c.output_vocab().render(c.pairs()[0].reflex) == "m ɨ w o");
  CHECK(c.language_counts() == std::vector<std::size_t>{1, 1});
}

TEST_CASE("parse errors carry the line number") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.location();
    }
    return 0;
  };
  CHECK(line_of("A\ta\ta\nB\ta\n") == 2);
  CHECK(line_of("A\ta\ta\n\nB\t\ta\n") == 3);
  CHECK(line_of("A\ta\t<s>\n") == 1);
  CHECK(line_of("A\ta\\q\ta\n") == 1);
  CHECK_THROWS_AS(parse("# only a comment\n"), ParseError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.tsv"), IoError);
}

TEST_CASE("write_corpus round-trips, including escapes") {
  Corpus c;
  c.add_pair("#L", {"a", "\\"}, {"b"});
  c.add_pair("M", {"a", "#"}, {"c", "d"});
  std::ostringstream out;
  write_corpus(out, c);
  const auto back = parse(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back.languages() == c.languages());
  CHECK(back.pairs() == c.pairs());
  CHECK(back.input_vocab() == c.input_vocab());
  CHECK(back.output_vocab() == c.output_vocab());
}

TEST_CASE("stratified folds partition each language") {
  const auto corpus = testing::three_language_corpus(53, 4);
  for (std::size_t k : {2u, 5u, 10u}) {
    const auto folds = make_folds(corpus, k, 11);
    REQUIRE(folds.size() == k);
    std::vector<int> seen(corpus.size(), 0);
    for (const auto& f : folds) {
      CHECK(f.train.size() + f.test.size() == corpus.size());
      for (auto i : f.test) ++seen[i];
      std::vector<std::size_t> per_lang(corpus.languages().size(), 0);
      for (auto i : f.test) ++per_lang[static_cast<std::size_t>(corpus.pairs()[i].language)];
      for (std::size_t l = 0; l < per_lang.size(); ++l) {
        const auto n = corpus.language_counts()[l];
        CHECK(per_lang[l] >= n / k);
        CHECK(per_lang[l] <= n / k + 1);
      }
    }
    for (int s : seen) CHECK(s == 1);
  }
  CHECK(make_folds(corpus, 10, 11)[3].test == make_folds(corpus, 10, 11)[3].test);
  CHECK(make_folds(corpus, 10, 11)[3].test != make_folds(corpus, 10, 12)[3].test);
  CHECK_THROWS_AS(make_folds(corpus, 1, 0), ArgumentError);
}
