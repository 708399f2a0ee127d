// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <fmt/format.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpora.hpp"
#include "oracles.hpp"
#include "reflex/alignment_ops.hpp"
#include "reflex/error_analysis.hpp"
#include "reflex/latent_lab.hpp"
#include "reflex/lstm_ops.hpp"
#include "reflex/metrics.hpp"
#include "reflex/phylo.hpp"
#include "reflex/random.hpp"
#include "reflex/reports.hpp"
#include "reflex/training.hpp"

namespace fs = std::filesystem;
using namespace reflex;
using ad::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double time_limit = 0.0;  // seconds, 0 = none
  std::function<Outcome()> run;
};

// ---------------------------------------------------------------------------
// Shared helpers

Tensor random_leaf(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor probe(const Tensor& t) {
  std::vector<double> w(t.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.17 * static_cast<double>(i % 7) - 0.05 * static_cast<double>(i % 3);
  return ad::sum(ad::mul(t, Tensor::from(t.shape(), std::move(w))));
}

SegmentSeq random_seq(Rng& rng, std::size_t len, std::size_t vocab) {
  SegmentSeq s(len);
  for (auto& v : s) v = static_cast<SegmentId>(Vocabulary::kEos + 1 + rng.index(vocab - Vocabulary::kEos - 1));
  return s;
}

std::vector<const CognatePair*> pointers(const std::vector<CognatePair>& pairs) {
  std::vector<const CognatePair*> out;
  for (const auto& p : pairs) out.push_back(&p);
  return out;
}

BatchLayout dense_layout(std::vector<std::size_t> steps, std::vector<std::size_t> positions) {
  BatchLayout l;
  l.batch = steps.size();
  l.steps = std::move(steps);
  l.positions = std::move(positions);
  for (auto s : l.steps) l.max_steps = std::max(l.max_steps, s);
  for (auto p : l.positions) l.max_positions = std::max(l.max_positions, p);
  return l;
}

// Requires steps and positions non-increasing in b, so ranks equal b.
BatchLayout packed_layout(const BatchLayout& dense) {
  BatchLayout l = dense;
  l.dec_rank.resize(l.batch);
  l.enc_rank.resize(l.batch);
  std::size_t rows = 0;
  for (std::size_t t = 0; t < l.max_steps; ++t) {
    l.dec_offset.push_back(rows);
    std::size_t r = 0;
    for (std::size_t b = 0; b < l.batch; ++b) {
      if (t < l.steps[b]) l.dec_rank[b] = r++;
    }
    rows += r;
  }
  l.dec_rows = rows;
  rows = 0;
  for (std::size_t j = 0; j < l.max_positions; ++j) {
    l.enc_offset.push_back(rows);
    std::size_t r = 0;
    for (std::size_t b = 0; b < l.batch; ++b) {
      if (j < l.positions[b]) l.enc_rank[b] = r++;
    }
    rows += r;
  }
  l.enc_rows = rows;
  return l;
}

std::vector<std::pair<std::string, std::vector<double>>> embeddings(const TransducerModel& m) {
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (std::size_t l = 0; l < m.languages().size(); ++l) {
    const auto z = read_language_embedding(m, static_cast<LanguageId>(l));
    out.emplace_back(m.languages()[l], std::vector<double>(z.values().begin(), z.values().end()));
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// AC1

Outcome exact_marginal() {
  const auto corpus = testing::tiny_corpus(20, 13);
  const std::size_t Vin = corpus.input_vocab().size();
  const std::size_t Vout = corpus.output_vocab().size();
  Rng rng(101);
  double worst = 0.0;
  std::size_t compared = 0;
  constexpr std::size_t kDraws = 100;
  for (std::size_t draw = 0; draw < kDraws; ++draw) {
    ModelConfig mc;
    mc.lang_dim = 3;
    mc.emb_dim = 4;
    mc.hidden_dim = 6;
    mc.mode = static_cast<EmbeddingMode>(draw % 3);
    mc.seed = derive_seed(7, draw);
    TransducerModel m(mc, corpus);
    // Widen the draw beyond the initialiser's scale so alignments are peaked.
    for (auto t : m.parameter_list()) {
      for (auto& v : t.mutable_values()) v *= 1.0 + 2.0 * rng.uniform();
    }
    std::vector<CognatePair> batch;
    for (std::size_t nx = 1; nx <= 4; ++nx) {
      for (std::size_t ny = 1; ny <= 4; ++ny) {
        const auto lang = static_cast<LanguageId>(rng.index(corpus.languages().size()));
        batch.push_back({lang, random_seq(rng, nx, Vin), random_seq(rng, ny, Vout)});
      }
    }
    const auto batched = batch_log_likelihood(m, pointers(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& p = batch[i];
      const double oracle = testing::brute_force_log_marginal(alignment_potentials(m, p.etymon, p.reflex, p.language));
      const double single = sequence_log_likelihood(m, p.etymon, p.reflex, p.language);
      worst = std::max({worst, std::abs(single - oracle), std::abs(batched.at(i) - oracle)});
      ++compared;
    }
  }
  return {worst < 1e-9, fmt::format("{} draws, {} sequences, max |dlogp| = {:.3e}", kDraws, compared, worst)};
}

// ---------------------------------------------------------------------------
// AC2

Outcome gradient_checks() {
  struct Case {
    std::string name;
    std::function<Tensor()> loss;
    std::vector<Tensor> inputs;
  };
  Rng rng(17);
  const auto a = random_leaf({3, 4}, rng);
  const auto b = random_leaf({4, 2}, rng);
  const auto c = random_leaf({3, 4}, rng);
  const auto v = random_leaf({4}, rng);
  std::vector<Case> cases{
      {"matmul", [&] { return probe(ad::matmul(a, b)); }, {a, b}},
      {"add", [&] { return probe(ad::add(a, c)); }, {a, c}},
      {"add_row", [&] { return probe(ad::add(a, v)); }, {a, v}},
      {"sub", [&] { return probe(ad::sub(a, c)); }, {a, c}},
      {"mul", [&] { return probe(ad::mul(a, c)); }, {a, c}},
      {"scale", [&] { return probe(ad::scale(a, -1.7)); }, {a}},
      {"concat", [&] { return probe(ad::concat({a, c})); }, {a, c}},
      {"concat_rows",
       [&] {
         std::vector<Tensor> parts{a, c};
         return probe(ad::concat_rows(parts));
       },
       {a, c}},
      {"slice", [&] { return probe(ad::slice(a, 1, 3)); }, {a}},
      {"slice_rows", [&] { return probe(ad::slice_rows(a, 1, 3)); }, {a}},
      {"reshape", [&] { return probe(ad::reshape(a, {2, 6})); }, {a}},
      {"sigmoid", [&] { return probe(ad::sigmoid(a)); }, {a}},
      {"tanh", [&] { return probe(ad::tanh(a)); }, {a}},
      {"log_softmax", [&] { return probe(ad::log_softmax(a)); }, {a}},
      {"logsumexp", [&] { return probe(ad::logsumexp(a)); }, {a}},
      {"sum", [&] { return ad::sum(a); }, {a}},
      {"embedding_lookup", [&] { return probe(ad::embedding_lookup(a, std::vector<std::size_t>{2, 0, 2})); }, {a}},
  };

  const std::size_t B = 3, H = 2;
  const auto pre = random_leaf({B, 4 * H}, rng, -2, 2);
  const auto lb = random_leaf({4 * H}, rng);
  const auto lh = random_leaf({B, H}, rng);
  const auto lc = random_leaf({B, H}, rng);
  cases.push_back({"lstm_update", [=] { return probe(lstm_update(pre, lb, lh, lc)); }, {pre, lb, lh, lc}});
  cases.push_back(
      {"lstm_update_masked", [=] { return probe(lstm_update(pre, lb, lh, lc, {1, 0, 1})); }, {pre, lb, lh, lc}});

  const auto layout = dense_layout({4, 2, 2}, {3, 3, 1});
  const auto packed = packed_layout(layout);
  const std::size_t Hp = 3, V = 5;
  const std::vector<SegmentId> targets{1, 3, 2, 4, 0, 2, 0, 0, 3, 1, 0, 0};
  for (const auto* l : {&layout, &packed}) {
    const auto dec = random_leaf({l->dec_row_count(), Hp}, rng);
    const auto enc = random_leaf({l->enc_row_count(), Hp}, rng);
    const auto w = random_leaf({Hp, V}, rng);
    const auto bo = random_leaf({V}, rng);
    const std::string tag = l == &layout ? "dense" : "packed";
    const BatchLayout copy = *l;
    cases.push_back({"pairwise_scores/" + tag, [=] { return probe(pairwise_scores(dec, enc, copy)); }, {dec, enc}});
    cases.push_back({"pairwise_emission/" + tag,
                     [=] { return probe(pairwise_emission(dec, enc, w, bo, copy, targets)); },
                     {dec, enc, w, bo}});
  }
  const auto e = random_leaf({layout.batch, layout.max_steps, layout.max_positions}, rng, -3, 0);
  const auto s = random_leaf({layout.batch, layout.max_steps, layout.max_positions}, rng, -2, 2);
  cases.push_back({"monotonic_marginal", [=] { return probe(monotonic_marginal(e, s, layout)); }, {e, s}});

  const auto corpus = testing::tiny_corpus(12, 5);
  std::vector<const CognatePair*> batch;
  for (std::size_t i = 0; i < 4; ++i) batch.push_back(&corpus.pairs()[i]);
  std::vector<TransducerModel> models;
  for (auto mode : {EmbeddingMode::kDense, EmbeddingMode::kSigmoid, EmbeddingMode::kStraightThrough}) {
    ModelConfig mc;
    mc.lang_dim = 3;
    mc.emb_dim = 3;
    mc.hidden_dim = 4;
    mc.mode = mode;
    mc.seed = 3;
    models.emplace_back(mc, corpus);
  }
  for (const auto& m : models) {
    auto params = m.parameter_list();
    if (m.mode() == EmbeddingMode::kStraightThrough) {
      // The step function is flat almost everywhere; its surrogate gradient
      // is checked separately.
      const auto* table = m.params().language_table.node();
      std::erase_if(params, [&](const Tensor& t) { return t.node() == table; });
    }
    const auto* mp = &m;
    cases.push_back({fmt::format("model_loss/{}", to_string(m.mode())), [=] { return batch_loss(*mp, batch); }, params});
  }

  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_case;
  for (const auto& cs : cases) {
    const auto r = testing::check_gradients(cs.loss, cs.inputs, 1e-5);
    checked += r.checked;
    if (r.checked == 0) return {false, cs.name + " checked no elements"};
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_case = cs.name + " " + r.worst;
    }
  }
  return {worst < 1e-6,
          fmt::format("{} cases, {} elements, max rel err {:.3e} ({})", cases.size(), checked, worst, worst_case)};
}

// ---------------------------------------------------------------------------
// AC3

Outcome straight_through_contract() {
  const auto corpus = testing::tiny_corpus(12, 5);
  std::vector<const CognatePair*> batch;
  for (std::size_t i = 0; i < 6; ++i) batch.push_back(&corpus.pairs()[i]);
  std::size_t reads = 0, non_binary = 0, mismatched = 0, compared = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ModelConfig mc;
    mc.lang_dim = 6;
    mc.emb_dim = 3;
    mc.hidden_dim = 4;
    mc.mode = EmbeddingMode::kStraightThrough;
    mc.seed = seed;
    TransducerModel st(mc, corpus);
    mc.mode = EmbeddingMode::kDense;
    TransducerModel surrogate(mc, corpus);
    const auto src = st.params().named();
    auto dst = surrogate.params().named();
    for (std::size_t i = 0; i < src.size(); ++i) {
      std::copy(src[i].second.values().begin(), src[i].second.values().end(), dst[i].second.mutable_values().begin());
    }
    // Identity in place of the step: the surrogate reads the 0/1 values as is.
    for (auto& x : surrogate.params().language_table.mutable_values()) x = x >= 0.0 ? 1.0 : 0.0;

    for (std::size_t l = 0; l < corpus.languages().size(); ++l) {
      const auto z = read_language_embedding(st, static_cast<LanguageId>(l));
      for (double x : z.values()) {
        ++reads;
        non_binary += (x == 0.0 || x == 1.0) ? 0 : 1;
      }
    }
    for (auto t : st.parameter_list()) t.zero_grad();
    for (auto t : surrogate.parameter_list()) t.zero_grad();
    ad::backward(batch_loss(st, batch));
    ad::backward(batch_loss(surrogate, batch));
    const auto ga = st.params().language_table.grad();
    const auto gb = surrogate.params().language_table.grad();
    if (ga.size() != gb.size()) return {false, "gradient shapes differ"};
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ++compared;
      mismatched += ga[i] == gb[i] ? 0 : 1;
    }
  }
  return {non_binary == 0 && mismatched == 0 && compared > 0,
          fmt::format("{} reads, {} outside {{0,1}}; {} raw-row gradients, {} not exactly equal", reads, non_binary,
                      compared, mismatched)};
}

// ---------------------------------------------------------------------------
// AC4

Outcome synthetic_end_to_end() {
  const auto corpus = testing::three_language_corpus(500, 2024);
  std::vector<std::string> parts;
  bool ok = true;
  for (auto mode : {EmbeddingMode::kDense, EmbeddingMode::kSigmoid, EmbeddingMode::kStraightThrough}) {
    ModelConfig mc;
    mc.lang_dim = 16;
    mc.emb_dim = 16;
    mc.hidden_dim = 32;
    mc.mode = mode;
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 256;
    tc.learning_rate = 1e-3;
    tc.folds = 10;
    tc.seed = 77;
    const auto result = run_kfold(corpus, mc, tc, 1);
    const auto& r = result.aggregate.overall;
    ok = ok && r.wer <= 0.15 && r.per <= 0.05;
    parts.push_back(fmt::format("{} WER {:.4f} PER {:.4f}", to_string(mode), r.wer, r.per));
  }
  std::string detail = fmt::format("{} pairs, K=10;", corpus.size());
  for (const auto& p : parts) detail += " " + p + ";";
  detail.pop_back();
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// AC5

Outcome genetic_signal() {
  const auto reference = parse_newick(testing::nested_six_language_tree());
  std::size_t passing = 0;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto corpus = testing::nested_six_language_corpus(300, seed);
    ModelConfig mc;
    mc.lang_dim = 16;
    mc.emb_dim = 16;
    mc.hidden_dim = 32;
    mc.mode = EmbeddingMode::kSigmoid;
    mc.seed = derive_seed(seed, 1);
    TrainConfig tc;
    tc.epochs = 150;
    tc.batch_size = 256;
    tc.learning_rate = 1e-3;
    tc.seed = derive_seed(seed, 2);
    tc.train_on_all = true;
    const auto m = train(corpus, mc, tc);
    const auto tree = neighbor_join(cosine_distance_matrix(embeddings(m)));
    const auto q = quartet_counts(tree, reference);
    passing += q.distance() <= 0.33 ? 1 : 0;
    detail += fmt::format("{}seed {} GQD {}/{} = {:.3f}", detail.empty() ? "" : "; ", seed, q.differing,
                          q.resolved_reference, q.distance());
  }
  return {passing >= 2, fmt::format("{} of 3 seeds <= 0.33 ({})", passing, detail)};
}

// ---------------------------------------------------------------------------
// AC6

Outcome nj_consistency() {
  Rng rng(606);
  std::size_t recovered = 0;
  constexpr std::size_t kTrees = 100;
  for (std::size_t i = 0; i < kTrees; ++i) {
    const std::size_t n = 3 + rng.index(6);
    const auto tree = testing::random_binary_tree(n, rng);
    const auto nj = neighbor_join(testing::path_length_matrix(tree));
    recovered += same_topology(nj, tree) && generalized_quartet_distance(nj, tree) == 0.0 ? 1 : 0;
  }
  return {recovered == kTrees, fmt::format("{} of {} trees (n = 3..8) recovered exactly", recovered, kTrees)};
}

// ---------------------------------------------------------------------------
// AC7

Outcome quartet_oracle() {
  Rng rng(707);
  std::size_t agree = 0, self_zero = 0, contracted = 0;
  constexpr std::size_t kPairs = 50;
  for (std::size_t i = 0; i < kPairs; ++i) {
    const std::size_t n = 4 + rng.index(7);
    auto a = testing::random_binary_tree(n, rng);
    auto b = testing::random_binary_tree(n, rng);
    if (i % 3 == 1) {
      a = testing::contract_internal_edges(a, 1 + rng.index(n - 3), rng);
      ++contracted;
    }
    if (i % 3 == 2) {
      b = testing::contract_internal_edges(b, 1 + rng.index(n - 3), rng);
      ++contracted;
    }
    const auto got = quartet_counts(a, b);
    const auto want = testing::four_point_quartets(a, b);
    agree += got.differing == want.differing && got.resolved_reference == want.resolved_reference &&
                     got.total == want.total
                 ? 1
                 : 0;
    self_zero += generalized_quartet_distance(a, a) == 0.0 && generalized_quartet_distance(b, b) == 0.0 ? 1 : 0;
  }
  return {agree == kPairs && self_zero == kPairs,
          fmt::format("{} of {} pairs match the four-point counts ({} with contracted edges); GQD(T,T)=0 for {} of {}",
                      agree, kPairs, contracted, self_zero, kPairs)};
}

// ---------------------------------------------------------------------------
// AC8

Outcome metric_oracles() {
  Rng rng(808);
  constexpr std::size_t kPairs = 1000;
  constexpr std::size_t kVocab = 9;
  std::size_t lev_bad = 0, per_bad = 0;
  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < kPairs; ++i) {
    auto g = random_seq(rng, rng.index(11), kVocab);
    auto p = rng.bernoulli(0.3) ? g : random_seq(rng, rng.index(11), kVocab);
    if (g.empty() && p.empty()) g = random_seq(rng, 1, kVocab);
    const auto d = levenshtein(g, p);
    lev_bad += d == testing::reference_levenshtein(g, p) ? 0 : 1;
    const double expect = static_cast<double>(d) / static_cast<double>(std::max(g.size(), p.size()));
    per_bad += per(g, p) == expect ? 0 : 1;
    records.push_back({static_cast<LanguageId>(i % 3), std::move(g), std::move(p)});
  }
  std::size_t wrong = 0;
  double per_sum = 0.0;
  for (const auto& r : records) {
    wrong += r.gold == r.predicted ? 0 : 1;
    per_sum += per(r.gold, r.predicted);
  }
  const double wer_expect = static_cast<double>(wrong) / static_cast<double>(kPairs);
  const auto rates = error_rates(records);
  const bool rates_ok = wer(records) == wer_expect && rates.overall.wer == wer_expect &&
                        std::abs(rates.overall.per - per_sum / static_cast<double>(kPairs)) < 1e-12;

  std::size_t axiom_bad = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto a = random_seq(rng, rng.index(9), kVocab);
    const auto b = random_seq(rng, rng.index(9), kVocab);
    const auto c = random_seq(rng, rng.index(9), kVocab);
    const auto ab = levenshtein(a, b);
    const bool ok = levenshtein(a, a) == 0 && (a == b) == (ab == 0) && ab == levenshtein(b, a) &&
                    levenshtein(a, c) <= ab + levenshtein(b, c);
    axiom_bad += ok ? 0 : 1;
  }
  return {lev_bad == 0 && per_bad == 0 && rates_ok && axiom_bad == 0,
          fmt::format("levenshtein mismatches {}/{}, PER mismatches {}, WER/PER aggregates {}, axiom failures {}/1000",
                      lev_bad, kPairs, per_bad, rates_ok ? "exact" : "wrong", axiom_bad)};
}

// ---------------------------------------------------------------------------
// AC9

Outcome error_pipeline() {
  const auto corpus = testing::three_language_corpus(200, 909);
  constexpr std::string_view kForeign = "ʘ";
  Vocabulary output = corpus.output_vocab();
  const SegmentId foreign = output.intern(kForeign);
  ModelConfig mc;
  mc.lang_dim = 8;
  mc.emb_dim = 16;
  mc.hidden_dim = 32;
  mc.mode = EmbeddingMode::kSigmoid;
  mc.seed = 9;
  TransducerModel model(mc, corpus.input_vocab(), output, corpus.languages());
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 64;
  tc.learning_rate = 3e-3;
  tc.seed = 10;
  train_in_place(model, pointers(corpus.pairs()), tc);

  std::size_t reconstructed = 0;
  for (const auto& p : corpus.pairs()) {
    const auto rules = pair_rules(model, p.language, p.etymon, p.reflex);
    SegmentSeq sources, joined;
    for (const auto& r : rules) {
      sources.push_back(r.source);
      joined.insert(joined.end(), r.target.begin(), r.target.end());
    }
    reconstructed += sources == p.etymon && joined == p.reflex ? 1 : 0;
  }

  const auto inventory = extract_rules(model, corpus.pairs());
  std::vector<SegmentSeq> predictions;
  for (const auto& p : corpus.pairs()) predictions.push_back(greedy_decode(model, p.etymon, p.language));
  const auto model_errors = classify_errors(model, inventory, corpus.pairs(), predictions);

  // Replace one segment per chosen form with a symbol the gold inventory never emits.
  std::set<std::size_t> injected;
  for (std::size_t i = 0; i < corpus.size(); i += 20) {
    predictions[i] = corpus.pairs()[i].reflex;
    predictions[i][predictions[i].size() / 2] = foreign;
    injected.insert(i);
  }
  const auto with_injection = classify_errors(model, inventory, corpus.pairs(), predictions);
  std::set<std::size_t> caught;
  bool foreign_is_u = true;
  for (const auto& e : with_injection.edits) {
    if (std::find(e.rule.target.begin(), e.rule.target.end(), foreign) == e.rule.target.end()) continue;
    caught.insert(e.case_index);
    foreign_is_u = foreign_is_u && e.category == EditClass::kUnmotivated;
  }

  auto sums_to_one = [](const ErrorBreakdown& b) {
    if (!b.has_errors) return b.edits.empty();
    return std::abs(b.same_language + b.other_language + b.unmotivated - 1.0) < 1e-12 &&
           b.same_language_count + b.other_language_count + b.unmotivated_count == b.edits.size();
  };
  const bool ok = reconstructed == corpus.size() && sums_to_one(model_errors) && sums_to_one(with_injection) &&
                  with_injection.has_errors && foreign_is_u && caught == injected;
  return {ok, fmt::format("reconstructed {}/{} pairs; model edits {} (SL {:.3f} OL {:.3f} U {:.3f}); "
                          "injected substitutions classified U in {}/{} forms",
                          reconstructed, corpus.size(), model_errors.edits.size(), model_errors.same_language,
                          model_errors.other_language, model_errors.unmotivated, caught.size(), injected.size())};
}

// ---------------------------------------------------------------------------
// AC10

#ifdef REFLEX_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + REFLEX_CLI_PATH + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

Outcome determinism() {
  const fs::path ws = fs::temp_directory_path() / fmt::format("reflex_acceptance_{}", ::getpid());
  fs::remove_all(ws);
  fs::create_directories(ws);
  std::vector<std::string> notes;
  bool ok = true;

#ifdef REFLEX_CLI_PATH
  {
    std::ofstream(ws / "rules.txt") << "[A]\nt -> d / {a e i o u} _ {a e i o u}\n[B]\na -> o\n[C]\nk -> tʃ / _ {i e}\n";
    std::ofstream(ws / "kfold.cfg") << "k = 3\nepochs = 4\nhidden = 8\nemb-dim = 4\nlang-dim = 4\nbatch = 16\n"
                                       "seed = 31\nmode = st\nquiet = true\n";
    const bool synth = run_cli(fmt::format("synth --rules '{}' --words 40 --seed 5 --out '{}'",
                                           (ws / "rules.txt").string(), (ws / "s").string())) == 0;
    const std::string common =
        fmt::format("kfold --config '{}' --corpus '{}'", (ws / "kfold.cfg").string(), (ws / "s" / "corpus.tsv").string());
    const bool runs = synth && run_cli(common + " --out '" + (ws / "a").string() + "'") == 0 &&
                      run_cli(common + " --out '" + (ws / "b").string() + "'") == 0;
    std::size_t identical = 0;
    const std::vector<std::string> files{"metrics.tsv", "folds.tsv", "decoded.tsv", "loss.tsv"};
    for (const auto& f : files) {
      const auto x = slurp(ws / "a" / f);
      identical += runs && !x.empty() && x == slurp(ws / "b" / f) ? 1 : 0;
    }
    ok = ok && runs && identical == files.size();
    notes.push_back(fmt::format("kfold outputs identical {}/{}", identical, files.size()));
  }
#else
  ok = false;
  notes.push_back("CLI not built");
#endif

  {
    const auto corpus = testing::tiny_corpus(20, 8);
    ModelConfig mc;
    mc.lang_dim = 5;
    mc.emb_dim = 4;
    mc.hidden_dim = 6;
    mc.mode = EmbeddingMode::kSigmoid;
    mc.seed = 12;
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.seed = 13;
    tc.train_on_all = true;
    const auto m = train(corpus, mc, tc);
    save_model(m, ws / "a.ckpt");
    const auto loaded = load_model(ws / "a.ckpt");
    save_model(loaded, ws / "b.ckpt");
    bool same = loaded.config() == m.config() && loaded.input_vocab() == m.input_vocab() &&
                loaded.output_vocab() == m.output_vocab() && loaded.languages() == m.languages();
    const auto pa = m.params().named();
    const auto pb = loaded.params().named();
    same = same && pa.size() == pb.size();
    for (std::size_t i = 0; same && i < pa.size(); ++i) {
      const auto x = pa[i].second.values();
      const auto y = pb[i].second.values();
      same = x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
    }
    same = same && slurp(ws / "a.ckpt") == slurp(ws / "b.ckpt");
    ok = ok && same;
    notes.push_back(fmt::format("checkpoint round trip {}", same ? "bitwise" : "differs"));
  }
  fs::remove_all(ws);
  return {ok, fmt::format("{}; {}", notes[0], notes[1])};
}

// ---------------------------------------------------------------------------
// AC11

Outcome latent_lab_smoke() {
  const auto corpus = testing::three_language_corpus(200, 11);
  ModelConfig mc;
  mc.lang_dim = 16;
  mc.emb_dim = 16;
  mc.hidden_dim = 32;
  mc.mode = EmbeddingMode::kStraightThrough;
  mc.seed = 5;
  TrainConfig tc;
  tc.epochs = 60;
  tc.seed = 6;
  tc.train_on_all = true;
  const auto model = train(corpus, mc, tc);

  std::vector<SegmentSeq> etyma;
  for (std::size_t i = 0; i < corpus.size() && etyma.size() < 100; i += 3) etyma.push_back(corpus.pairs()[i].etymon);
  const std::vector<double> ps{0.2, 0.4, 0.6, 0.8};

  auto sample_reports = [&](std::size_t jobs, std::size_t& unterminated, std::size_t& decodes) {
    std::ostringstream out;
    for (double p : ps) {
      const auto r = sample_latent(model, {SamplingFamily::kBinomial, p, 100}, etyma, 41, jobs);
      unterminated += r.unterminated;
      for (const auto& row : r.outputs) decodes += row.size();
      write_sample_report(out, model, r);
    }
    return out.str();
  };
  std::size_t unterminated = 0, decodes = 0, ignored = 0, ignored_decodes = 0;
  const auto samples_a = sample_reports(1, unterminated, decodes);
  const auto samples_b = sample_reports(2, ignored, ignored_decodes);

  const auto& sym = corpus.input_vocab();
  std::vector<EchoCohort> cohorts;
  for (std::size_t i = 0; i < corpus.size() && cohorts.size() < 25; i += 7) {
    EchoCohort c;
    for (auto s : corpus.pairs()[i].etymon) c.base.push_back(sym.symbol(s));
    c.substitutes = {"p", "t", "k", "m", "s"};
    cohorts.push_back(std::move(c));
  }
  const auto echo_a = echo_experiment(model, cohorts, ps, 43, 1);
  const auto echo_b = echo_experiment(model, cohorts, ps, 43, 2);
  std::size_t ratios = 0, out_of_range = 0;
  for (const auto& r : echo_a.regimes) {
    for (double x : r.ratios) {
      ++ratios;
      out_of_range += x >= 0.0 && x <= 1.0 ? 0 : 1;
    }
  }
  std::ostringstream ea, eb;
  write_echo_report(ea, echo_a);
  write_echo_report(eb, echo_b);
  const bool reproducible = samples_a == samples_b && ea.str() == eb.str();
  return {unterminated == 0 && decodes == ps.size() * etyma.size() * 100 && ratios > 0 && out_of_range == 0 &&
              reproducible,
          fmt::format("{} sampled decodes, {} unterminated; {} echo ratios, {} outside [0,1]; reports {}", decodes,
                      unterminated, ratios, out_of_range, reproducible ? "reproduced bitwise" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflex acceptance suite"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Criteria to run, e.g. --only AC1 AC6");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"AC1", "exact marginal equals enumeration", 10.0, exact_marginal},
      {"AC2", "finite-difference gradients", 30.0, gradient_checks},
      {"AC3", "straight-through contract", 0.0, straight_through_contract},
      {"AC4", "synthetic end-to-end accuracy", 1200.0, synthetic_end_to_end},
      {"AC5", "genetic signal in embeddings", 0.0, genetic_signal},
      {"AC6", "neighbor joining consistency", 0.0, nj_consistency},
      {"AC7", "quartet counts match oracle", 0.0, quartet_oracle},
      {"AC8", "metric oracles and axioms", 0.0, metric_oracles},
      {"AC9", "error pipeline coherence", 0.0, error_pipeline},
      {"AC10", "determinism", 0.0, determinism},
      {"AC11", "latent lab smoke", 0.0, latent_lab_smoke},
  };

  std::size_t failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt::format("{:.1f}s", secs);
    if (c.time_limit > 0.0) {
      timing += fmt::format(" / limit {:.0f}s", c.time_limit);
      if (secs > c.time_limit) {
        o.pass = false;
        o.detail += "; over time limit";
      }
    }
    failed += o.pass ? 0 : 1;
    fmt::print("{} {} {}: {} [{}]\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail, timing);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
