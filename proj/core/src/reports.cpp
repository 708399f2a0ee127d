// SPDX-License-Identifier: Apache-2.0
#include "reflex/reports.hpp"

#include <fmt/format.h>

#include <ostream>

namespace reflex {
namespace {

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

const std::string& name_of(const std::vector<std::string>& languages, LanguageId id) {
  return languages.at(static_cast<std::size_t>(id));
}

void rate_row(std::ostream& out, const std::string& prefix, const ErrorRates& r) {
  out << prefix << '\t' << fixed(r.wer) << '\t' << fixed(r.per) << '\t' << r.count << '\n';
}

}  // namespace

void write_fold_metrics(std::ostream& out, const KFoldResult& result, const std::vector<std::string>& languages) {
  out << "language\tfold\tWER\tPER\tcount\n";
  for (const auto& f : result.folds) {
    for (const auto& [lang, r] : f.rates.by_language) {
      rate_row(out, fmt::format("{}\t{}", name_of(languages, lang), f.fold), r);
    }
    rate_row(out, fmt::format("ALL\t{}", f.fold), f.rates.overall);
  }
}

void write_aggregate_metrics(std::ostream& out, const RateBreakdown& rates, const std::vector<std::string>& languages) {
  out << "language\tWER\tPER\tcount\n";
  for (const auto& [lang, r] : rates.by_language) rate_row(out, name_of(languages, lang), r);
  rate_row(out, "ALL", rates.overall);
}

void write_decoded(std::ostream& out, const Corpus& corpus, const KFoldResult& result) {
  out << "language\tetymon\tgold\tpredicted\tcorrect\n";
  for (const auto& f : result.folds) {
    for (const auto& d : f.outputs) {
      const auto& p = corpus.pairs().at(d.pair_index);
      out << corpus.language_name(p.language) << '\t' << corpus.input_vocab().render(p.etymon) << '\t'
          << corpus.output_vocab().render(p.reflex) << '\t' << corpus.output_vocab().render(d.predicted) << '\t'
          << (d.predicted == p.reflex ? 1 : 0) << '\n';
    }
  }
}

void write_rules(std::ostream& out, const TransducerModel& model, const RuleInventory& inventory) {
  out << "language\tsource\ttarget\n";
  for (auto lang : inventory.languages()) {
    for (const auto& [source, target] : inventory.rules(lang)) {
      out << name_of(model.languages(), lang) << '\t' << model.input_vocab().symbol(source) << '\t'
          << (target.empty() ? std::string("∅") : model.output_vocab().render(target)) << '\n';
    }
  }
}

void write_breakdowns(std::ostream& out, const std::vector<BreakdownRow>& rows) {
  out << "model\tlanguage\tSL\tOL\tU\tedits\twrong_forms\n";
  for (const auto& [name, language, b] : rows) {
    out << name << '\t' << language << '\t' << fixed(b.same_language) << '\t' << fixed(b.other_language) << '\t'
        << fixed(b.unmotivated) << '\t' << b.edits.size() << '\t' << b.wrong_forms << '\n';
  }
}

void write_agreement(std::ostream& out, const std::vector<std::string>& labels, const AgreementMatrix& matrix) {
  for (const auto& l : labels) out << '\t' << l;
  out << '\n';
  for (std::size_t a = 0; a < matrix.size(); ++a) {
    out << labels.at(a);
    for (std::size_t b = 0; b < matrix[a].size(); ++b) {
      out << '\t';
      if (a == b) {
        out << "-";
      } else if (matrix[a][b]) {
        out << fixed(*matrix[a][b]);
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

void write_distance_matrix(std::ostream& out, const DistanceMatrix& d) {
  for (const auto& t : d.taxa()) out << '\t' << t;
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << d.taxa()[i];
    for (std::size_t j = 0; j < d.size(); ++j) out << '\t' << fixed(d.at(i, j));
    out << '\n';
  }
}

void write_heatmap(std::ostream& out, const ActivityHeatmap& heatmap) {
  out << "language";
  for (std::size_t d = 0; d < heatmap.dims; ++d) out << "\td" << d;
  out << "\tactive\n";
  for (std::size_t l = 0; l < heatmap.languages.size(); ++l) {
    out << heatmap.languages[l];
    for (int v : heatmap.cells[l]) out << '\t' << v;
    out << '\t' << heatmap.active_per_language[l] << '\n';
  }
}

void write_perturbation(std::ostream& out, const TransducerModel& model, const PerturbationReport& report) {
  const auto& vocab = model.output_vocab();
  out << "# language\t" << name_of(model.languages(), report.language) << '\n';
  out << "# etymon\t" << model.input_vocab().render(report.etymon) << '\n';
  out << "# base_output\t" << vocab.render(report.base_output) << '\n';
  out << "# unique_outputs\t" << report.unique_outputs << '\n';
  out << "dimension\toutput\n";
  for (const auto& [d, seq] : report.flips) out << d << '\t' << vocab.render(seq) << '\n';
}

void write_sample_report(std::ostream& out, const TransducerModel& model, const SampleReport& report) {
  out << "# regime\t" << report.regime.to_string() << '\n';
  out << "# mean_unique\t" << fixed(report.mean_unique) << '\n';
  out << "# unterminated\t" << report.unterminated << '\n';
  out << "etymon\tunique_outputs\toutputs\n";
  for (std::size_t e = 0; e < report.etyma.size(); ++e) {
    out << model.input_vocab().render(report.etyma[e]) << '\t' << report.unique_outputs[e] << '\t';
    for (std::size_t s = 0; s < report.outputs[e].size(); ++s) {
      if (s > 0) out << " | ";
      out << model.output_vocab().render(report.outputs[e][s]);
    }
    out << '\n';
  }
}

void write_echo_report(std::ostream& out, const EchoReport& report) {
  out << "# skipped_cohorts\t" << report.skipped_cohorts << '\n';
  out << "p\tpairs\tagreeing\tproportion\tunterminated\n";
  for (const auto& r : report.regimes) {
    out << fixed(r.p) << '\t' << r.pairs << '\t' << r.agreeing << '\t' << fixed(r.proportion) << '\t' << r.unterminated
        << '\n';
  }
}

}  // namespace reflex
