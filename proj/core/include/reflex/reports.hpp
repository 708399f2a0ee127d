// SPDX-License-Identifier: Apache-2.0
/**
 * @file   reports.hpp
 * @brief  UTF-8 TSV writers for every result type. Numbers use fixed
 *         six-digit formatting so reruns are byte-identical.
 */
#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "reflex/error_analysis.hpp"
#include "reflex/latent_lab.hpp"
#include "reflex/phylo.hpp"
#include "reflex/training.hpp"

namespace reflex {

/// language, fold, WER, PER, count. One row per (fold, language) plus an
/// `ALL` row per fold.
void write_fold_metrics(std::ostream& out, const KFoldResult& result, const std::vector<std::string>& languages);
/// language, WER, PER, count over every held-out pair, `ALL` last.
void write_aggregate_metrics(std::ostream& out, const RateBreakdown& rates, const std::vector<std::string>& languages);
/// language, etymon, gold, predicted, correct; fold order, then pair order.
void write_decoded(std::ostream& out, const Corpus& corpus, const KFoldResult& result);

/// language, source, target. Deletions print the target as ∅.
void write_rules(std::ostream& out, const TransducerModel& model, const RuleInventory& inventory);
struct BreakdownRow {
  std::string model;
  std::string language;  // "ALL" for the pooled row
  ErrorBreakdown breakdown;
};
/// model, language, SL, OL, U, edits, wrong_forms.
void write_breakdowns(std::ostream& out, const std::vector<BreakdownRow>& rows);
/// Square matrix with a header row; the diagonal prints as -, undefined cells as NA.
void write_agreement(std::ostream& out, const std::vector<std::string>& labels, const AgreementMatrix& matrix);

/// Header row of taxa, then one row per taxon.
void write_distance_matrix(std::ostream& out, const DistanceMatrix& d);

/// language, d0..d{D-1} as 0/1, then active count.
void write_heatmap(std::ostream& out, const ActivityHeatmap& heatmap);
void write_perturbation(std::ostream& out, const TransducerModel& model, const PerturbationReport& report);
void write_sample_report(std::ostream& out, const TransducerModel& model, const SampleReport& report);
void write_echo_report(std::ostream& out, const EchoReport& report);

}  // namespace reflex
