// SPDX-License-Identifier: Apache-2.0
/**
 * @file   error_analysis.hpp
 * @brief  Sound-change extraction from Viterbi alignments, SL/OL/U error
 *         classification, and cross-model error agreement.
 *
 * A rule maps one etymon segment to the (possibly empty) group of reflex
 * segments aligned to it. Rules ignore conditioning environment.
 */
#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "reflex/corpus.hpp"
#include "reflex/model.hpp"

namespace reflex {

struct SoundChangeRule {
  LanguageId language = 0;
  SegmentId source = 0;  // input-vocabulary id
  SegmentSeq target;     // output-vocabulary ids; empty = deletion

  auto operator<=>(const SoundChangeRule&) const = default;
};

/// One rule per input position: x_j -> (y_t for every t with a_t = j).
/// `path` must be monotone and index into `x`; an empty `y` with an empty
/// path yields only deletions.
std::vector<SoundChangeRule> rules_from_alignment(LanguageId language, const SegmentSeq& x, const SegmentSeq& y,
                                                  const AlignmentPath& path);

/// Rules of a single (etymon, form) pair under the model's Viterbi alignment.
/// An empty form aligns nowhere and yields all deletions.
std::vector<SoundChangeRule> pair_rules(const TransducerModel& model, LanguageId language, const SegmentSeq& etymon,
                                        const SegmentSeq& form);

class RuleInventory {
 public:
  void add(const SoundChangeRule& rule);
  bool contains(const SoundChangeRule& rule) const;
  /// True when `rule` (ignoring its language field) is attested in `language`.
  bool attested_in(LanguageId language, const SoundChangeRule& rule) const;
  std::vector<LanguageId> languages() const;
  const std::set<std::pair<SegmentId, SegmentSeq>>& rules(LanguageId language) const;
  std::size_t size() const;

 private:
  std::map<LanguageId, std::set<std::pair<SegmentId, SegmentSeq>>> rules_;
};

/// Union of `pair_rules` over every pair, per language.
RuleInventory extract_rules(const TransducerModel& model, std::span<const CognatePair> pairs);

enum class EditClass { kSameLanguage, kOtherLanguage, kUnmotivated };
std::string_view to_string(EditClass c);

struct ErroneousEdit {
  std::size_t case_index = 0;
  SoundChangeRule rule;
  EditClass category = EditClass::kUnmotivated;
};

struct ErrorBreakdown {
  double same_language = 0.0;
  double other_language = 0.0;
  double unmotivated = 0.0;
  std::size_t same_language_count = 0;
  std::size_t other_language_count = 0;
  std::size_t unmotivated_count = 0;
  std::size_t wrong_forms = 0;
  bool has_errors = false;  // false: no erroneous edits, all proportions 0
  std::vector<ErroneousEdit> edits;
};

EditClass classify_edit(const RuleInventory& inventory, const SoundChangeRule& rule);

/// For every pair whose prediction differs from the gold reflex, the rules of
/// etymon -> prediction that are not in the multiset of etymon -> gold rules
/// are classified against `inventory`.
ErrorBreakdown classify_errors(const TransducerModel& model, const RuleInventory& inventory,
                               std::span<const CognatePair> pairs, std::span<const SegmentSeq> predictions);

/// Multiset difference `predicted - gold` of rule lists.
std::vector<SoundChangeRule> erroneous_rules(std::vector<SoundChangeRule> predicted, std::vector<SoundChangeRule> gold);

/// cell(A, B) = |errors(A) & errors(B)| / |errors(A)|; nullopt when A made no
/// errors.
using AgreementMatrix = std::vector<std::vector<std::optional<double>>>;
AgreementMatrix error_agreement(std::span<const std::set<std::size_t>> error_sets);

}  // namespace reflex
