// SPDX-License-Identifier: Apache-2.0
// Single-sequence inference path. Built from primitive tensor ops one decoder
// step at a time, independent of the fused batch kernels used in training.
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "log_space.hpp"
#include "model_internal.hpp"
#include "reflex/errors.hpp"
#include "reflex/model.hpp"

namespace reflex {
namespace {

// Suffix log-normaliser R[i] = LSE_{k >= i} s[k].
std::vector<double> suffix_lse(std::span<const double> s) {
  std::vector<double> r(s.size());
  double acc = kNegInf;
  for (std::size_t i = s.size(); i-- > 0;) {
    acc = log_add(acc, s[i]);
    r[i] = acc;
  }
  return r;
}

struct StepOutput {
  std::vector<double> log_emission;  // (J, V) row-major
  std::vector<double> score;         // (J)
};

// Runs the decoder over the prefix and produces per-step potentials.
class StepDecoder {
 public:
  StepDecoder(const TransducerModel& model, const SegmentSeq& x, const ad::Tensor& z) : model_(model) {
    const std::size_t Dl = model.config().lang_dim;
    if (z.shape() != ad::Shape{Dl}) {
      throw DimensionError(
          fmt::format("language vector must have shape ({}), got {}", Dl, ad::shape_string(z.shape())));
    }
    auto enc = internal::run_encoder(model, {&x}, ad::reshape(z.detach(), {1, Dl}));
    auto start = internal::decoder_start(enc, 1, model.config().hidden_dim);
    h_ = start.first.detach();
    c_ = start.second.detach();
    enc_ = ad::concat_rows(enc.states).detach();
    enc_proj_ = ad::matmul(enc_, model.params().emit_encoder).detach();
  }

  std::size_t positions() const { return enc_.dim(0); }
  std::size_t vocab() const { return model_.output_vocab().size(); }

  StepOutput step(SegmentId previous) {
    const auto& P = model_.params();
    const std::size_t H = model_.config().hidden_dim;
    auto emb = ad::embedding_lookup(P.output_embedding, std::vector<std::size_t>{static_cast<std::size_t>(previous)});
    auto [h, c] = internal::lstm_cell(P.decoder, emb, h_, c_);
    h_ = h.detach();
    c_ = c.detach();

    auto dp = ad::reshape(ad::add(ad::matmul(h_, P.emit_decoder), P.emit_bias), {H});
    auto hidden = ad::tanh(ad::add(enc_proj_, dp));
    auto logp = ad::log_softmax(ad::add(ad::matmul(hidden, P.output_weight), P.output_bias));
    auto q = ad::reshape(ad::matmul(h_, P.attention), {H, 1});
    auto s = ad::matmul(enc_, q);

    StepOutput out;
    out.log_emission.assign(logp.values().begin(), logp.values().end());
    out.score.assign(s.values().begin(), s.values().end());
    return out;
  }

 private:
  const TransducerModel& model_;
  ad::Tensor h_;
  ad::Tensor c_;
  ad::Tensor enc_;
  ad::Tensor enc_proj_;
};

// Posterior over the aligned input position given the committed prefix.
class PositionFilter {
 public:
  explicit PositionFilter(std::size_t positions) : J_(positions) {}

  // Log prior over positions for the next step, given this step's scores.
  std::vector<double> prior(std::span<const double> score) const {
    auto r = suffix_lse(score);
    std::vector<double> out(J_);
    if (!started_) {
      for (std::size_t j = 0; j < J_; ++j) out[j] = score[j] - r[0];
      return out;
    }
    double acc = kNegInf;
    for (std::size_t j = 0; j < J_; ++j) {
      acc = log_add(acc, alpha_[j] - r[j]);
      out[j] = acc + score[j];
    }
    return out;
  }

  void commit(std::vector<double> joint) {
    double z = kNegInf;
    for (double v : joint) z = log_add(z, v);
    for (double& v : joint) v -= z;
    alpha_ = std::move(joint);
    started_ = true;
  }

 private:
  std::size_t J_;
  bool started_ = false;
  std::vector<double> alpha_;
};

// log sum_j exp(prior_j + E(j, v)) for every v.
std::vector<double> mixture(const std::vector<double>& prior, const StepOutput& step, std::size_t V) {
  std::vector<double> out(V, kNegInf);
  for (std::size_t j = 0; j < prior.size(); ++j) {
    for (std::size_t v = 0; v < V; ++v) out[v] = log_add(out[v], prior[j] + step.log_emission[j * V + v]);
  }
  return out;
}

std::vector<double> joint_for(const std::vector<double>& prior, const StepOutput& step, std::size_t V, SegmentId y) {
  std::vector<double> joint(prior.size());
  for (std::size_t j = 0; j < prior.size(); ++j) joint[j] = prior[j] + step.log_emission[j * V + static_cast<std::size_t>(y)];
  return joint;
}

void check_potentials(const AlignmentPotentials& p) {
  if (p.steps == 0 || p.positions == 0) throw ArgumentError("alignment potentials must be non-empty");
  if (p.emission.size() != p.steps * p.positions || p.score.size() != p.steps * p.positions) {
    throw DimensionError("alignment potentials have inconsistent sizes");
  }
}

}  // namespace

AlignmentPotentials alignment_potentials(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                                         LanguageId language) {
  internal::check_output(model, y);
  StepDecoder dec(model, x, read_language_embedding(model, language));
  const std::size_t V = dec.vocab();
  AlignmentPotentials out;
  out.steps = y.size() + 1;
  out.positions = dec.positions();
  out.emission.reserve(out.steps * out.positions);
  out.score.reserve(out.steps * out.positions);
  SegmentId prev = Vocabulary::kBos;
  for (std::size_t t = 0; t < out.steps; ++t) {
    SegmentId target = t < y.size() ? y[t] : Vocabulary::kEos;
    auto step = dec.step(prev);
    for (std::size_t j = 0; j < out.positions; ++j) {
      out.emission.push_back(step.log_emission[j * V + static_cast<std::size_t>(target)]);
      out.score.push_back(step.score[j]);
    }
    prev = target;
  }
  return out;
}

double monotonic_log_marginal(const AlignmentPotentials& p) {
  check_potentials(p);
  const std::size_t J = p.positions;
  std::vector<double> alpha(J);
  std::vector<double> next(J);
  std::span<const double> s0(p.score.data(), J);
  const double r00 = suffix_lse(s0)[0];
  for (std::size_t j = 0; j < J; ++j) alpha[j] = p.emission_at(0, j) + p.score_at(0, j) - r00;
  for (std::size_t t = 1; t < p.steps; ++t) {
    auto r = suffix_lse(std::span<const double>(p.score.data() + t * J, J));
    double acc = kNegInf;
    for (std::size_t j = 0; j < J; ++j) {
      acc = log_add(acc, alpha[j] - r[j]);
      next[j] = acc + p.emission_at(t, j) + p.score_at(t, j);
    }
    std::swap(alpha, next);
  }
  double total = kNegInf;
  for (double a : alpha) total = log_add(total, a);
  return total;
}

AlignmentPath monotonic_viterbi(const AlignmentPotentials& p) {
  check_potentials(p);
  const std::size_t J = p.positions;
  const std::size_t T = p.steps;
  std::vector<double> delta(J);
  std::vector<double> next(J);
  std::vector<std::size_t> back(T * J, 0);
  const double r00 = suffix_lse(std::span<const double>(p.score.data(), J))[0];
  for (std::size_t j = 0; j < J; ++j) delta[j] = p.emission_at(0, j) + p.score_at(0, j) - r00;
  for (std::size_t t = 1; t < T; ++t) {
    auto r = suffix_lse(std::span<const double>(p.score.data() + t * J, J));
    double best = kNegInf;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < J; ++j) {
      const double cand = delta[j] - r[j];
      if (j == 0 || cand > best) {
        best = cand;
        arg = j;
      }
      next[j] = best + p.emission_at(t, j) + p.score_at(t, j);
      back[t * J + j] = arg;
    }
    std::swap(delta, next);
  }
  std::size_t end = 0;
  for (std::size_t j = 1; j < J; ++j) {
    if (delta[j] > delta[end]) end = j;
  }
  AlignmentPath path;
  path.log_score = delta[end];
  std::vector<std::size_t> full(T);
  full[T - 1] = end;
  for (std::size_t t = T - 1; t > 0; --t) full[t - 1] = back[t * J + full[t]];
  path.positions.assign(full.begin(), full.end() - 1);
  return path;
}

AlignmentPath viterbi_alignment(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                                LanguageId language) {
  return monotonic_viterbi(alignment_potentials(model, x, y, language));
}

DecodeResult greedy_decode_with_embedding(const TransducerModel& model, const SegmentSeq& x, const ad::Tensor& z,
                                          std::size_t max_len) {
  if (max_len == 0) throw ArgumentError("max_len must be positive");
  StepDecoder dec(model, x, z);
  PositionFilter filter(dec.positions());
  const std::size_t V = dec.vocab();
  DecodeResult out;
  SegmentId prev = Vocabulary::kBos;
  while (out.output.size() < max_len) {
    auto step = dec.step(prev);
    auto prior = filter.prior(step.score);
    auto pred = mixture(prior, step, V);
    SegmentId best = Vocabulary::kEos;
    for (std::size_t v = Vocabulary::kEos + 1; v < V; ++v) {
      if (pred[v] > pred[static_cast<std::size_t>(best)]) best = static_cast<SegmentId>(v);
    }
    if (best == Vocabulary::kEos) {
      out.ended_with_eos = true;
      break;
    }
    out.output.push_back(best);
    filter.commit(joint_for(prior, step, V, best));
    prev = best;
  }
  return out;
}

SegmentSeq greedy_decode(const TransducerModel& model, const SegmentSeq& x, LanguageId language,
                         std::optional<std::size_t> max_len) {
  return greedy_decode_with_embedding(model, x, read_language_embedding(model, language),
                                      max_len.value_or(model.config().max_decode_len))
      .output;
}

std::vector<double> teacher_forced_predictive(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                                              LanguageId language) {
  internal::check_output(model, y);
  StepDecoder dec(model, x, read_language_embedding(model, language));
  PositionFilter filter(dec.positions());
  const std::size_t V = dec.vocab();
  std::vector<double> out;
  SegmentId prev = Vocabulary::kBos;
  for (std::size_t t = 0; t <= y.size(); ++t) {
    SegmentId target = t < y.size() ? y[t] : Vocabulary::kEos;
    auto step = dec.step(prev);
    auto prior = filter.prior(step.score);
    double norm = kNegInf;
    for (double v : prior) norm = log_add(norm, v);
    auto joint = joint_for(prior, step, V, target);
    double z = kNegInf;
    for (double v : joint) z = log_add(z, v);
    out.push_back(z - norm);
    filter.commit(std::move(joint));
    prev = target;
  }
  return out;
}

}  // namespace reflex
