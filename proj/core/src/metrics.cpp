// SPDX-License-Identifier: Apache-2.0
#include "reflex/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "reflex/errors.hpp"

namespace reflex {

std::size_t levenshtein(std::span<const SegmentId> a, std::span<const SegmentId> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double per(std::span<const SegmentId> gold, std::span<const SegmentId> predicted) {
  const std::size_t longer = std::max(gold.size(), predicted.size());
  if (longer == 0) throw ArgumentError("per: both sequences are empty");
  return static_cast<double>(levenshtein(gold, predicted)) / static_cast<double>(longer);
}

double wer(std::span<const EvalRecord> records) {
  if (records.empty()) throw ArgumentError("wer: no records");
  const auto wrong = std::count_if(records.begin(), records.end(),
                                   [](const EvalRecord& r) { return r.gold != r.predicted; });
  return static_cast<double>(wrong) / static_cast<double>(records.size());
}

RateBreakdown error_rates(std::span<const EvalRecord> records) {
  if (records.empty()) throw ArgumentError("error_rates: no records");
  RateBreakdown out;
  std::map<LanguageId, double> per_sum;
  double total_per = 0.0;
  for (const auto& r : records) {
    const double p = per(r.gold, r.predicted);
    const bool wrong = r.gold != r.predicted;
    auto& lang = out.by_language[r.language];
    lang.count += 1;
    lang.wrong += wrong ? 1 : 0;
    per_sum[r.language] += p;
    out.overall.count += 1;
    out.overall.wrong += wrong ? 1 : 0;
    total_per += p;
  }
  auto finish = [](ErrorRates& e, double per_total) {
    e.wer = static_cast<double>(e.wrong) / static_cast<double>(e.count);
    e.per = per_total / static_cast<double>(e.count);
  };
  finish(out.overall, total_per);
  for (auto& [lang, rates] : out.by_language) finish(rates, per_sum[lang]);
  return out;
}

}  // namespace reflex
