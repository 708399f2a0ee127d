// SPDX-License-Identifier: Apache-2.0
#include "reflex/error_analysis.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "reflex/errors.hpp"

namespace reflex {

std::vector<SoundChangeRule> rules_from_alignment(LanguageId language, const SegmentSeq& x, const SegmentSeq& y,
                                                  const AlignmentPath& path) {
  if (path.positions.size() != y.size()) {
    throw ArgumentError(fmt::format("alignment has {} steps for an output of length {}", path.positions.size(), y.size()));
  }
  std::vector<SoundChangeRule> rules(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) rules[j] = {language, x[j], {}};
  std::size_t prev = 0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const std::size_t j = path.positions[t];
    if (j >= x.size() || j < prev) throw ArgumentError("alignment is not a monotone map into the input");
    rules[j].target.push_back(y[t]);
    prev = j;
  }
  return rules;
}

std::vector<SoundChangeRule> pair_rules(const TransducerModel& model, LanguageId language, const SegmentSeq& etymon,
                                        const SegmentSeq& form) {
  if (form.empty()) return rules_from_alignment(language, etymon, form, AlignmentPath{});
  return rules_from_alignment(language, etymon, form, viterbi_alignment(model, etymon, form, language));
}

void RuleInventory::add(const SoundChangeRule& rule) { rules_[rule.language].emplace(rule.source, rule.target); }

bool RuleInventory::contains(const SoundChangeRule& rule) const { return attested_in(rule.language, rule); }

bool RuleInventory::attested_in(LanguageId language, const SoundChangeRule& rule) const {
  auto it = rules_.find(language);
  return it != rules_.end() && it->second.count({rule.source, rule.target}) > 0;
}

std::vector<LanguageId> RuleInventory::languages() const {
  std::vector<LanguageId> out;
  for (const auto& [lang, set] : rules_) out.push_back(lang);
  return out;
}

const std::set<std::pair<SegmentId, SegmentSeq>>& RuleInventory::rules(LanguageId language) const {
  static const std::set<std::pair<SegmentId, SegmentSeq>> kEmpty;
  auto it = rules_.find(language);
  return it == rules_.end() ? kEmpty : it->second;
}

std::size_t RuleInventory::size() const {
  std::size_t n = 0;
  for (const auto& [lang, set] : rules_) n += set.size();
  return n;
}

RuleInventory extract_rules(const TransducerModel& model, std::span<const CognatePair> pairs) {
  RuleInventory inventory;
  for (const auto& p : pairs) {
    for (const auto& r : pair_rules(model, p.language, p.etymon, p.reflex)) inventory.add(r);
  }
  return inventory;
}

std::string_view to_string(EditClass c) {
  switch (c) {
    case EditClass::kSameLanguage:
      return "SL";
    case EditClass::kOtherLanguage:
      return "OL";
    case EditClass::kUnmotivated:
      return "U";
  }
  return "?";
}

EditClass classify_edit(const RuleInventory& inventory, const SoundChangeRule& rule) {
  if (inventory.attested_in(rule.language, rule)) return EditClass::kSameLanguage;
  for (auto lang : inventory.languages()) {
    if (lang != rule.language && inventory.attested_in(lang, rule)) return EditClass::kOtherLanguage;
  }
  return EditClass::kUnmotivated;
}

std::vector<SoundChangeRule> erroneous_rules(std::vector<SoundChangeRule> predicted, std::vector<SoundChangeRule> gold) {
  std::sort(predicted.begin(), predicted.end());
  std::sort(gold.begin(), gold.end());
  std::vector<SoundChangeRule> out;
  std::set_difference(predicted.begin(), predicted.end(), gold.begin(), gold.end(), std::back_inserter(out));
  return out;
}

ErrorBreakdown classify_errors(const TransducerModel& model, const RuleInventory& inventory,
                               std::span<const CognatePair> pairs, std::span<const SegmentSeq> predictions) {
  if (pairs.size() != predictions.size()) {
    throw ArgumentError(fmt::format("{} pairs but {} predictions", pairs.size(), predictions.size()));
  }
  ErrorBreakdown out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (predictions[i] == p.reflex) continue;
    ++out.wrong_forms;
    auto wrong = erroneous_rules(pair_rules(model, p.language, p.etymon, predictions[i]),
                                 pair_rules(model, p.language, p.etymon, p.reflex));
    for (auto& rule : wrong) {
      const auto category = classify_edit(inventory, rule);
      switch (category) {
        case EditClass::kSameLanguage:
          ++out.same_language_count;
          break;
        case EditClass::kOtherLanguage:
          ++out.other_language_count;
          break;
        case EditClass::kUnmotivated:
          ++out.unmotivated_count;
          break;
      }
      out.edits.push_back({i, std::move(rule), category});
    }
  }
  const std::size_t total = out.edits.size();
  if (total > 0) {
    out.has_errors = true;
    out.same_language = static_cast<double>(out.same_language_count) / static_cast<double>(total);
    out.other_language = static_cast<double>(out.other_language_count) / static_cast<double>(total);
    out.unmotivated = static_cast<double>(out.unmotivated_count) / static_cast<double>(total);
  }
  return out;
}

AgreementMatrix error_agreement(std::span<const std::set<std::size_t>> error_sets) {
  const std::size_t n = error_sets.size();
  AgreementMatrix out(n, std::vector<std::optional<double>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    if (error_sets[a].empty()) continue;
    for (std::size_t b = 0; b < n; ++b) {
      std::size_t shared = 0;
      for (auto id : error_sets[a]) shared += error_sets[b].count(id);
      out[a][b] = static_cast<double>(shared) / static_cast<double>(error_sets[a].size());
    }
  }
  return out;
}

}  // namespace reflex
