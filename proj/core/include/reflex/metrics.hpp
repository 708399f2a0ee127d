// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Segment-level edit distance, word error rate, phoneme error rate.
 */
#pragma once

#include <map>
#include <span>

#include "reflex/corpus.hpp"

namespace reflex {

struct EvalRecord {
  LanguageId language = 0;
  SegmentSeq gold;
  SegmentSeq predicted;
};

/// Unit-cost insert/delete/substitute distance.
std::size_t levenshtein(std::span<const SegmentId> a, std::span<const SegmentId> b);

/// levenshtein / max(|gold|, |predicted|). Throws ArgumentError when both are
/// empty.
double per(std::span<const SegmentId> gold, std::span<const SegmentId> predicted);

struct ErrorRates {
  double wer = 0.0;
  double per = 0.0;  // mean per-record PER
  std::size_t count = 0;
  std::size_t wrong = 0;
};

struct RateBreakdown {
  ErrorRates overall;
  std::map<LanguageId, ErrorRates> by_language;
};

/// Fraction of records whose prediction differs from gold. Throws on an empty
/// list.
double wer(std::span<const EvalRecord> records);

/// WER and mean PER, pooled and per language.
RateBreakdown error_rates(std::span<const EvalRecord> records);

}  // namespace reflex
