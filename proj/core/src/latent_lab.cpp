// SPDX-License-Identifier: Apache-2.0
#include "reflex/latent_lab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "reflex/errors.hpp"

namespace reflex {
namespace {

void require_straight_through(const TransducerModel& model, std::string_view what) {
  if (model.mode() != EmbeddingMode::kStraightThrough) {
    throw ModeError(fmt::format("{} needs a straight-through model, this one is {}", what, to_string(model.mode())));
  }
}

DecodeResult decode_with(const TransducerModel& model, const SegmentSeq& x, const std::vector<double>& z) {
  return greedy_decode_with_embedding(model, x, ad::Tensor::from({z.size()}, z), model.config().max_decode_len);
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double parse_number(std::string_view text, const std::string& context) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ArgumentError(fmt::format("'{}' is not a number in '{}'", text, context));
  }
  return value;
}

}  // namespace

ActivityHeatmap activity_heatmap(const TransducerModel& model) {
  require_straight_through(model, "activity_heatmap");
  ActivityHeatmap out;
  out.languages = model.languages();
  out.dims = model.config().lang_dim;
  std::vector<bool> used(out.dims, false);
  for (std::size_t l = 0; l < out.languages.size(); ++l) {
    const auto embedding = read_language_embedding(model, static_cast<LanguageId>(l));
    const auto z = embedding.values();
    std::vector<int> row(out.dims);
    std::size_t active = 0;
    for (std::size_t d = 0; d < out.dims; ++d) {
      row[d] = z[d] != 0.0 ? 1 : 0;
      active += static_cast<std::size_t>(row[d]);
      if (row[d] != 0) used[d] = true;
    }
    out.cells.push_back(std::move(row));
    out.active_per_language.push_back(active);
  }
  out.inactive_dims = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  return out;
}

PerturbationReport nearest_neighbors(const TransducerModel& model, LanguageId language, const SegmentSeq& etymon,
                                     std::size_t jobs) {
  require_straight_through(model, "nearest_neighbors");
  model.check_language(language);
  const auto embedding = read_language_embedding(model, language);
  const auto values = embedding.values();
  const std::vector<double> z(values.begin(), values.end());
  PerturbationReport out;
  out.language = language;
  out.etymon = etymon;
  out.base_output = decode_with(model, etymon, z).output;
  out.flips.resize(z.size());
  internal::parallel_for(z.size(), jobs, [&](std::size_t d) {
    auto flipped = z;
    flipped[d] = 1.0 - flipped[d];
    out.flips[d] = {d, decode_with(model, etymon, flipped).output};
  });
  std::set<SegmentSeq> unique;
  for (const auto& [d, seq] : out.flips) unique.insert(seq);
  out.unique_outputs = unique.size();
  return out;
}

void SamplingRegime::validate() const {
  if (samples == 0) throw ArgumentError("sampling regime needs at least one sample");
  switch (family) {
    case SamplingFamily::kGaussian:
      if (!(parameter > 0.0)) throw ArgumentError(fmt::format("gaussian sigma must be > 0, got {}", parameter));
      break;
    case SamplingFamily::kBeta:
      if (!(parameter > 0.0)) throw ArgumentError(fmt::format("beta alpha must be > 0, got {}", parameter));
      break;
    case SamplingFamily::kBinomial:
      if (!(parameter > 0.0 && parameter < 1.0)) {
        throw ArgumentError(fmt::format("binomial p must lie in (0, 1), got {}", parameter));
      }
      break;
  }
}

EmbeddingMode SamplingRegime::mode() const {
  switch (family) {
    case SamplingFamily::kGaussian:
      return EmbeddingMode::kDense;
    case SamplingFamily::kBeta:
      return EmbeddingMode::kSigmoid;
    case SamplingFamily::kBinomial:
      break;
  }
  return EmbeddingMode::kStraightThrough;
}

SamplingRegime SamplingRegime::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ':');) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3) {
    throw ArgumentError(fmt::format("sampling regime '{}' must look like family:value[:samples]", text));
  }
  SamplingRegime r;
  if (parts[0] == "gaussian") {
    r.family = SamplingFamily::kGaussian;
  } else if (parts[0] == "beta") {
    r.family = SamplingFamily::kBeta;
  } else if (parts[0] == "binomial") {
    r.family = SamplingFamily::kBinomial;
  } else {
    throw ArgumentError(fmt::format("unknown sampling family '{}'", parts[0]));
  }
  r.parameter = parse_number(parts[1], text);
  if (parts.size() == 3) {
    const double n = parse_number(parts[2], text);
    if (n < 1 || n != static_cast<double>(static_cast<std::size_t>(n))) {
      throw ArgumentError(fmt::format("sample count in '{}' must be a positive integer", text));
    }
    r.samples = static_cast<std::size_t>(n);
  }
  r.validate();
  return r;
}

std::string SamplingRegime::to_string() const {
  const char* name = family == SamplingFamily::kGaussian ? "gaussian" : family == SamplingFamily::kBeta ? "beta" : "binomial";
  return fmt::format("{}:{}:{}", name, parameter, samples);
}

std::vector<std::vector<double>> draw_samples(const SamplingRegime& regime, std::size_t dims, Rng& rng) {
  regime.validate();
  std::vector<std::vector<double>> out(regime.samples, std::vector<double>(dims));
  for (auto& row : out) {
    for (auto& v : row) {
      switch (regime.family) {
        case SamplingFamily::kGaussian:
          v = rng.normal(0.0, regime.parameter);
          break;
        case SamplingFamily::kBeta:
          v = rng.beta(regime.parameter, regime.parameter);
          break;
        case SamplingFamily::kBinomial:
          v = rng.bernoulli(regime.parameter) ? 1.0 : 0.0;
          break;
      }
    }
  }
  return out;
}

SampleReport sample_latent(const TransducerModel& model, const SamplingRegime& regime,
                           const std::vector<SegmentSeq>& etyma, std::uint64_t seed, std::size_t jobs) {
  regime.validate();
  if (regime.mode() != model.mode()) {
    throw ArgumentError(fmt::format("{} samples do not fit a {} model (expected {})", regime.to_string(),
                                    to_string(model.mode()), to_string(regime.mode())));
  }
  Rng rng(seed);
  const auto samples = draw_samples(regime, model.config().lang_dim, rng);
  SampleReport out;
  out.regime = regime;
  out.etyma = etyma;
  out.outputs.assign(etyma.size(), std::vector<SegmentSeq>(samples.size()));
  std::vector<char> ended(etyma.size() * samples.size(), 0);
  internal::parallel_for(etyma.size() * samples.size(), jobs, [&](std::size_t k) {
    const std::size_t e = k / samples.size();
    const std::size_t s = k % samples.size();
    auto r = decode_with(model, etyma[e], samples[s]);
    out.outputs[e][s] = std::move(r.output);
    ended[k] = r.ended_with_eos ? 1 : 0;
  });
  out.unterminated = static_cast<std::size_t>(std::count(ended.begin(), ended.end(), 0));
  double total = 0.0;
  for (const auto& row : out.outputs) {
    const std::set<SegmentSeq> unique(row.begin(), row.end());
    out.unique_outputs.push_back(unique.size());
    total += static_cast<double>(unique.size());
  }
  out.mean_unique = etyma.empty() ? 0.0 : total / static_cast<double>(etyma.size());
  return out;
}

std::vector<std::vector<std::string>> EchoCohort::members() const {
  if (base.empty()) return {};
  std::optional<std::regex> re;
  if (exclude) re.emplace(*exclude, std::regex::ECMAScript);
  std::vector<std::vector<std::string>> out;
  auto consider = [&](std::vector<std::string> form) {
    if (std::find(out.begin(), out.end(), form) != out.end()) return;
    if (re) {
      std::string joined;
      for (std::size_t i = 0; i < form.size(); ++i) joined += (i ? " " : "") + form[i];
      if (std::regex_search(joined, *re)) return;
    }
    out.push_back(std::move(form));
  };
  consider(base);
  for (const auto& sub : substitutes) {
    auto form = base;
    form[0] = sub;
    consider(std::move(form));
  }
  return out;
}

std::vector<EchoCohort> parse_cohorts(std::istream& in) {
  std::vector<EchoCohort> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, '\t');) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(fmt::format("cohort line {}: expected base<TAB>substitutes[<TAB>regex]", number), number);
    }
    EchoCohort c;
    c.base = split_ws(fields[0]);
    c.substitutes = split_ws(fields[1]);
    if (c.base.empty()) throw ParseError(fmt::format("cohort line {}: empty base form", number), number);
    if (fields.size() == 3 && !fields[2].empty()) {
      try {
        std::regex probe(fields[2], std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ParseError(fmt::format("cohort line {}: bad regex: {}", number, e.what()), number);
      }
      c.exclude = fields[2];
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<EchoCohort> load_cohorts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open cohort file {}", path.string()));
  return parse_cohorts(in);
}

double final_agreement(const SegmentSeq& a, const SegmentSeq& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t suffix = 0;
  while (suffix < a.size() && suffix < b.size() && a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) ++suffix;
  const double ratio = static_cast<double>(suffix) / (0.5 * static_cast<double>(a.size() + b.size()));
  if (ratio > 1.0) throw std::logic_error("final agreement above 1");
  return ratio;
}

EchoReport echo_experiment(const TransducerModel& model, const std::vector<EchoCohort>& cohorts,
                           const std::vector<double>& regimes, std::uint64_t seed, std::size_t jobs) {
  require_straight_through(model, "echo_experiment");
  for (double p : regimes) SamplingRegime{SamplingFamily::kBinomial, p, 1}.validate();

  EchoReport out;
  std::vector<std::vector<SegmentSeq>> groups;
  for (const auto& cohort : cohorts) {
    const auto members = cohort.members();
    if (members.size() < 2) {
      ++out.skipped_cohorts;
      continue;
    }
    std::vector<SegmentSeq> encoded;
    for (const auto& m : members) {
      SegmentSeq x;
      for (const auto& sym : m) x.push_back(model.input_vocab().id(sym));
      encoded.push_back(std::move(x));
    }
    groups.push_back(std::move(encoded));
  }
  std::vector<std::pair<std::size_t, std::size_t>> forms;  // (group, member)
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t m = 0; m < groups[g].size(); ++m) forms.emplace_back(g, m);
  }

  const auto& vocab = model.output_vocab();
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    Rng rng(derive_seed(seed, r));
    const auto samples =
        draw_samples({SamplingFamily::kBinomial, regimes[r], forms.size()}, model.config().lang_dim, rng);
    std::vector<SegmentSeq> outputs(forms.size());
    std::vector<char> ended(forms.size(), 0);
    internal::parallel_for(forms.size(), jobs, [&](std::size_t k) {
      auto res = decode_with(model, groups[forms[k].first][forms[k].second], samples[k]);
      std::erase_if(res.output, [&](SegmentId id) { return vocab.is_suprasegmental(id); });
      outputs[k] = std::move(res.output);
      ended[k] = res.ended_with_eos ? 1 : 0;
    });

    EchoRegimeResult result;
    result.p = regimes[r];
    result.unterminated = static_cast<std::size_t>(std::count(ended.begin(), ended.end(), 0));
    std::size_t k = 0;
    for (const auto& group : groups) {
      for (std::size_t a = 0; a < group.size(); ++a) {
        for (std::size_t b = a + 1; b < group.size(); ++b) {
          const double ratio = final_agreement(outputs[k + a], outputs[k + b]);
          result.ratios.push_back(ratio);
          ++result.pairs;
          if (ratio > 0.5) ++result.agreeing;
        }
      }
      k += group.size();
    }
    result.proportion = result.pairs == 0 ? 0.0 : static_cast<double>(result.agreeing) / static_cast<double>(result.pairs);
    out.regimes.push_back(std::move(result));
  }
  return out;
}

}  // namespace reflex
