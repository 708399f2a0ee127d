// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "corpora.hpp"
#include "reflex/error_analysis.hpp"
#include "reflex/errors.hpp"

using namespace reflex;

namespace {

AlignmentPath path(std::vector<std::size_t> positions) {
  AlignmentPath p;
  p.positions = std::move(positions);
  return p;
}

}  // namespace

TEST_CASE("rules read off an alignment") {
  // x = 10 11 12, y = 20 21 22 aligned 0,0,2: 10 -> 20 21, 11 -> ∅, 12 -> 22.
  const auto rules = rules_from_alignment(1, {10, 11, 12}, {20, 21, 22}, path({0, 0, 2}));
  REQUIRE(rules.size() == 3);
  CHECK(rules[0] == SoundChangeRule{1, 10, {20, 21}});
  CHECK(rules[1] == SoundChangeRule{1, 11, {}});
  CHECK(rules[2] == SoundChangeRule{1, 12, {22}});
  CHECK(rules_from_alignment(0, {5, 6}, {}, path({})).size() == 2);
  CHECK_THROWS_AS(rules_from_alignment(0, {5, 6}, {1, 2}, path({1, 0})), ArgumentError);
  CHECK_THROWS_AS(rules_from_alignment(0, {5, 6}, {1, 2}, path({0, 2})), ArgumentError);
  CHECK_THROWS_AS(rules_from_alignment(0, {5, 6}, {1, 2}, path({0})), ArgumentError);
}

TEST_CASE("edits are classified against the inventory") {
  RuleInventory inv;
  inv.add({0, 5, {7}});
  inv.add({1, 5, {8}});
  inv.add({1, 6, {}});
  CHECK(inv.size() == 3);
  CHECK(classify_edit(inv, {0, 5, {7}}) == EditClass::kSameLanguage);
  CHECK(classify_edit(inv, {0, 5, {8}}) == EditClass::kOtherLanguage);
  CHECK(classify_edit(inv, {0, 6, {}}) == EditClass::kOtherLanguage);
  CHECK(classify_edit(inv, {1, 6, {}}) == EditClass::kSameLanguage);
  CHECK(classify_edit(inv, {0, 5, {9}}) == EditClass::kUnmotivated);
  CHECK(classify_edit(inv, {2, 5, {7, 7}}) == EditClass::kUnmotivated);
  CHECK(to_string(EditClass::kOtherLanguage) == "OL");
}

TEST_CASE("erroneous rules are a multiset difference") {
  const std::vector<SoundChangeRule> pred{{0, 1, {2}}, {0, 1, {2}}, {0, 3, {}}};
  const std::vector<SoundChangeRule> gold{{0, 1, {2}}, {0, 3, {4}}};
  const auto diff = erroneous_rules(pred, gold);
  REQUIRE(diff.size() == 2);
  CHECK(diff[0] == SoundChangeRule{0, 1, {2}});
  CHECK(diff[1] == SoundChangeRule{0, 3, {}});
  CHECK(erroneous_rules(gold, gold).empty());
}

TEST_CASE("classified error proportions sum to one; unseen substitutions are unmotivated") {
  auto corpus = testing::tiny_corpus(20, 3);
  ModelConfig cfg;
  cfg.lang_dim = 3;
  cfg.emb_dim = 4;
  cfg.hidden_dim = 6;
  // A symbol no gold reflex uses, so no rule can target it.
  corpus.add_pair(corpus.languages()[0], {"a"}, {"ʘ"});
  const TransducerModel m(cfg, corpus);
  const std::vector<CognatePair> gold(corpus.pairs().begin(), corpus.pairs().end() - 1);
  const auto inventory = extract_rules(m, gold);
  const SegmentId click = corpus.output_vocab().id("ʘ");

  std::vector<SegmentSeq> predictions;
  for (const auto& p : gold) predictions.push_back(p.reflex);
  predictions[2][0] = click;
  predictions[5].pop_back();
  const auto b = classify_errors(m, inventory, gold, predictions);
  CHECK(b.wrong_forms == 2);
  REQUIRE(b.has_errors);
  CHECK(b.same_language + b.other_language + b.unmotivated == doctest::Approx(1.0));
  CHECK(b.same_language_count + b.other_language_count + b.unmotivated_count == b.edits.size());
  bool saw_click = false;
  for (const auto& e : b.edits) {
    if (std::find(e.rule.target.begin(), e.rule.target.end(), click) != e.rule.target.end()) {
      saw_click = true;
      CHECK(e.category == EditClass::kUnmotivated);
      CHECK(e.case_index == 2);
    }
  }
  CHECK(saw_click);

  std::vector<SegmentSeq> exact;
  for (const auto& p : gold) exact.push_back(p.reflex);
  const auto none = classify_errors(m, inventory, gold, exact);
  CHECK_FALSE(none.has_errors);
  CHECK(none.wrong_forms == 0);
  CHECK_THROWS_AS(classify_errors(m, inventory, gold, std::vector<SegmentSeq>{}), ArgumentError);
}

TEST_CASE("error agreement matrix") {
  const std::vector<std::set<std::size_t>> sets{{1, 2, 3, 4}, {2, 4}, {}};
  const auto m = error_agreement(sets);
  CHECK(*m[0][0] == 1.0);
  CHECK(*m[0][1] == doctest::Approx(0.5));
  CHECK(*m[1][0] == 1.0);
  CHECK(*m[0][2] == 0.0);
  CHECK_FALSE(m[2][0].has_value());
  CHECK_FALSE(m[2][2].has_value());
}
