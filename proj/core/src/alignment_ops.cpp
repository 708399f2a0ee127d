// SPDX-License-Identifier: Apache-2.0
#include "reflex/alignment_ops.hpp"

#include <fmt/format.h>

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <memory>

#include "dense_product.hpp"
#include "log_space.hpp"
#include "reflex/errors.hpp"

namespace reflex {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapMat = Eigen::Map<RowMat>;

void expect_rows(const ad::Tensor& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rank() != 2 || t.dim(0) != rows || (cols && t.dim(1) != cols)) {
    throw DimensionError(fmt::format("{}: expected ({}, {}), got {}", what, rows, cols, ad::shape_string(t.shape())));
  }
}

void expect_pairwise(const ad::Tensor& t, const BatchLayout& l, const char* what) {
  const ad::Shape want{l.batch, l.max_steps, l.max_positions};
  if (t.shape() != want) {
    throw DimensionError(fmt::format("{}: expected {}, got {}", what, ad::shape_string(want), ad::shape_string(t.shape())));
  }
}

}  // namespace

void BatchLayout::validate() const {
  if (batch == 0 || steps.size() != batch || positions.size() != batch) {
    throw ArgumentError("BatchLayout: per-sequence lengths do not match the batch size");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (steps[b] == 0 || steps[b] > max_steps || positions[b] == 0 || positions[b] > max_positions) {
      throw ArgumentError(fmt::format("BatchLayout: sequence {} has lengths ({}, {}) outside ({}, {})", b, steps[b],
                                      positions[b], max_steps, max_positions));
    }
  }
  if (packed()) {
    if (dec_offset.size() != max_steps || enc_offset.size() != max_positions || dec_rank.size() != batch ||
        enc_rank.size() != batch) {
      throw ArgumentError("BatchLayout: packed row maps have the wrong sizes");
    }
    for (std::size_t b = 0; b < batch; ++b) {
      if (dec_row(b, steps[b] - 1) >= dec_rows || enc_row(b, positions[b] - 1) >= enc_rows) {
        throw ArgumentError(fmt::format("BatchLayout: sequence {} maps outside the packed rows", b));
      }
    }
  }
}

ad::Tensor pairwise_emission(const ad::Tensor& dec_proj, const ad::Tensor& enc_proj, const ad::Tensor& out_weight,
                             const ad::Tensor& out_bias, const BatchLayout& layout,
                             const std::vector<SegmentId>& targets) {
  layout.validate();
  const std::size_t B = layout.batch;
  const std::size_t T = layout.max_steps;
  const std::size_t J = layout.max_positions;
  const std::size_t H = out_weight.rank() == 2 ? out_weight.dim(0) : 0;
  const std::size_t V = out_weight.rank() == 2 ? out_weight.dim(1) : 0;
  expect_rows(dec_proj, layout.dec_row_count(), H, "pairwise_emission(dec_proj)");
  expect_rows(enc_proj, layout.enc_row_count(), H, "pairwise_emission(enc_proj)");
  if (out_bias.shape() != ad::Shape{V}) throw DimensionError("pairwise_emission: output bias must have shape (V)");
  if (targets.size() != B * T) throw ArgumentError("pairwise_emission: targets must be B x T");

  struct Saved {
    std::vector<std::size_t> dec_row, enc_row, out_index;
    std::vector<SegmentId> target;
    RowMat hidden;  // N x H, tanh activations
    RowMat probs;   // N x V, softmax
  };
  auto saved = std::make_shared<Saved>();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < layout.steps[b]; ++t) {
      const SegmentId y = targets[b * T + t];
      if (y < 0 || static_cast<std::size_t>(y) >= V) {
        throw ArgumentError(fmt::format("pairwise_emission: target {} out of range", y));
      }
      for (std::size_t j = 0; j < layout.positions[b]; ++j) {
        saved->dec_row.push_back(layout.dec_row(b, t));
        saved->enc_row.push_back(layout.enc_row(b, j));
        saved->out_index.push_back(layout.pair_index(b, t, j));
        saved->target.push_back(y);
      }
    }
  }
  const auto N = static_cast<Eigen::Index>(saved->dec_row.size());
  const auto eH = static_cast<Eigen::Index>(H);
  const auto eV = static_cast<Eigen::Index>(V);
  ConstMapMat dec(dec_proj.values().data(), static_cast<Eigen::Index>(layout.dec_row_count()), eH);
  ConstMapMat enc(enc_proj.values().data(), static_cast<Eigen::Index>(layout.enc_row_count()), eH);
  saved->hidden.resize(N, eH);
  for (Eigen::Index n = 0; n < N; ++n) {
    saved->hidden.row(n) = (dec.row(static_cast<Eigen::Index>(saved->dec_row[n])) +
                            enc.row(static_cast<Eigen::Index>(saved->enc_row[n])))
                               .array()
                               .tanh();
  }
  ConstMapMat w(out_weight.values().data(), eH, eV);
  Eigen::Map<const Eigen::RowVectorXd> bias(out_bias.values().data(), eV);
  saved->probs = internal::product(saved->hidden, w);
  saved->probs.rowwise() += bias;

  std::vector<double> out(B * T * J, 0.0);
  for (Eigen::Index n = 0; n < N; ++n) {
    auto row = saved->probs.row(n);
    const double mx = row.maxCoeff();
    const double picked = row(saved->target[n]) - mx;
    row.array() = (row.array() - mx).exp();
    const double z = row.sum();
    out[saved->out_index[n]] = picked - std::log(z);
    row /= z;
  }

  return ad::Tensor::make_result(
      {B, T, J}, std::move(out), {dec_proj, enc_proj, out_weight, out_bias},
      [saved, N, eH, eV, dec_rows = layout.dec_row_count(), enc_rows = layout.enc_row_count()](ad::detail::Node& self) {
        // d out / d logits = onehot(y) - p, scaled by the upstream gradient.
        RowMat g_logits = -saved->probs;
        for (Eigen::Index n = 0; n < N; ++n) {
          const double up = self.grad[saved->out_index[n]];
          g_logits(n, saved->target[n]) += 1.0;
          g_logits.row(n) *= up;
        }
        auto& p_dec = *self.parents[0];
        auto& p_enc = *self.parents[1];
        auto& p_w = *self.parents[2];
        auto& p_b = *self.parents[3];
        if (p_w.requires_grad) MapMat(p_w.ensure_grad().data(), eH, eV) += internal::product(saved->hidden.transpose(), g_logits);
        if (p_b.requires_grad) {
          // Reduce into an owned vector first: summing straight into the
          // unaligned map would pick per-column summation orders by address.
          const Eigen::RowVectorXd column_sums = g_logits.colwise().sum();
          Eigen::Map<Eigen::RowVectorXd>(p_b.ensure_grad().data(), eV) += column_sums;
        }
        if (p_dec.requires_grad || p_enc.requires_grad) {
          ConstMapMat w(p_w.values.data(), eH, eV);
          RowMat g_pre = internal::product(g_logits, w.transpose()).array() * (1.0 - saved->hidden.array().square());
          if (p_dec.requires_grad) {
            MapMat gd(p_dec.ensure_grad().data(), static_cast<Eigen::Index>(dec_rows), eH);
            for (Eigen::Index n = 0; n < N; ++n) gd.row(static_cast<Eigen::Index>(saved->dec_row[n])) += g_pre.row(n);
          }
          if (p_enc.requires_grad) {
            MapMat ge(p_enc.ensure_grad().data(), static_cast<Eigen::Index>(enc_rows), eH);
            for (Eigen::Index n = 0; n < N; ++n) ge.row(static_cast<Eigen::Index>(saved->enc_row[n])) += g_pre.row(n);
          }
        }
      });
}

ad::Tensor pairwise_scores(const ad::Tensor& queries, const ad::Tensor& keys, const BatchLayout& layout) {
  layout.validate();
  const std::size_t B = layout.batch;
  const std::size_t T = layout.max_steps;
  const std::size_t J = layout.max_positions;
  const std::size_t H = queries.rank() == 2 ? queries.dim(1) : 0;
  expect_rows(queries, layout.dec_row_count(), H, "pairwise_scores(queries)");
  expect_rows(keys, layout.enc_row_count(), H, "pairwise_scores(keys)");
  auto q = queries.values();
  auto k = keys.values();
  std::vector<double> out(B * T * J, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < layout.steps[b]; ++t) {
      const double* qr = q.data() + layout.dec_row(b, t) * H;
      for (std::size_t j = 0; j < layout.positions[b]; ++j) {
        const double* kr = k.data() + layout.enc_row(b, j) * H;
        double s = 0.0;
        for (std::size_t h = 0; h < H; ++h) s += qr[h] * kr[h];
        out[layout.pair_index(b, t, j)] = s;
      }
    }
  }
  return ad::Tensor::make_result({B, T, J}, std::move(out), {queries, keys}, [layout, H](ad::detail::Node& self) {
    const std::size_t B = layout.batch;
    auto& pq = *self.parents[0];
    auto& pk = *self.parents[1];
    double* gq = pq.requires_grad ? pq.ensure_grad().data() : nullptr;
    double* gk = pk.requires_grad ? pk.ensure_grad().data() : nullptr;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < layout.steps[b]; ++t) {
        const std::size_t qrow = layout.dec_row(b, t) * H;
        for (std::size_t j = 0; j < layout.positions[b]; ++j) {
          const double g = self.grad[layout.pair_index(b, t, j)];
          if (g == 0.0) continue;
          const std::size_t krow = layout.enc_row(b, j) * H;
          for (std::size_t h = 0; h < H; ++h) {
            if (gq) gq[qrow + h] += g * pk.values[krow + h];
            if (gk) gk[krow + h] += g * pq.values[qrow + h];
          }
        }
      }
    }
  });
}

ad::Tensor monotonic_marginal(const ad::Tensor& emission, const ad::Tensor& scores, const BatchLayout& layout) {
  layout.validate();
  expect_pairwise(emission, layout, "monotonic_marginal(emission)");
  expect_pairwise(scores, layout, "monotonic_marginal(scores)");
  const std::size_t B = layout.batch;
  auto E = emission.values();
  auto S = scores.values();

  struct Saved {
    std::vector<double> alpha;  // same layout as the inputs
    std::vector<double> suffix;  // R(t, i)
    std::vector<double> log_p;
  };
  auto saved = std::make_shared<Saved>();
  saved->alpha.assign(E.size(), kNegInf);
  saved->suffix.assign(E.size(), kNegInf);
  saved->log_p.assign(B, 0.0);

  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t T = layout.steps[b];
    const std::size_t J = layout.positions[b];
    auto at = [&](std::size_t t, std::size_t j) { return layout.pair_index(b, t, j); };
    for (std::size_t t = 0; t < T; ++t) {
      double acc = kNegInf;
      for (std::size_t i = J; i-- > 0;) {
        acc = log_add(acc, S[at(t, i)]);
        saved->suffix[at(t, i)] = acc;
      }
    }
    for (std::size_t j = 0; j < J; ++j) {
      saved->alpha[at(0, j)] = E[at(0, j)] + S[at(0, j)] - saved->suffix[at(0, 0)];
    }
    for (std::size_t t = 1; t < T; ++t) {
      double prefix = kNegInf;
      for (std::size_t j = 0; j < J; ++j) {
        prefix = log_add(prefix, saved->alpha[at(t - 1, j)] - saved->suffix[at(t, j)]);
        saved->alpha[at(t, j)] = E[at(t, j)] + S[at(t, j)] + prefix;
      }
    }
    double total = kNegInf;
    for (std::size_t j = 0; j < J; ++j) total = log_add(total, saved->alpha[at(T - 1, j)]);
    saved->log_p[b] = total;
  }

  std::vector<double> out = saved->log_p;
  return ad::Tensor::make_result({B}, std::move(out), {emission, scores}, [saved, layout](ad::detail::Node& self) {
    auto& pe = *self.parents[0];
    auto& ps = *self.parents[1];
    double* ge = pe.requires_grad ? pe.ensure_grad().data() : nullptr;
    double* gs = ps.requires_grad ? ps.ensure_grad().data() : nullptr;
    const auto& E = pe.values;
    const auto& S = ps.values;
    for (std::size_t b = 0; b < layout.batch; ++b) {
      const double up = self.grad[b];
      if (up == 0.0) continue;
      const std::size_t T = layout.steps[b];
      const std::size_t J = layout.positions[b];
      auto at = [&](std::size_t t, std::size_t j) { return layout.pair_index(b, t, j); };
      const auto& alpha = saved->alpha;
      const auto& R = saved->suffix;
      const double log_p = saved->log_p[b];

      // beta(t, j): log probability of the remaining outputs given a_t = j.
      std::vector<double> beta(T * J, kNegInf);
      for (std::size_t j = 0; j < J; ++j) beta[(T - 1) * J + j] = 0.0;
      for (std::size_t t = T - 1; t >= 1; --t) {
        double acc = kNegInf;
        for (std::size_t i = J; i-- > 0;) {
          acc = log_add(acc, S[at(t, i)] + E[at(t, i)] + beta[t * J + i]);
          beta[(t - 1) * J + i] = acc - R[at(t, i)];
        }
      }
      // gamma(t, j) = P(a_t = j | y); d/dE = gamma. For the scores, the
      // transition log-prob S(t, j) - R(t, i) contributes gamma(t, j) minus
      // the expected suffix-softmax mass under the previous posterior.
      std::vector<double> log_gamma_prev(J, kNegInf);
      log_gamma_prev[0] = 0.0;  // a_0 is the start state at position 0
      std::vector<double> log_gamma(J);
      for (std::size_t t = 0; t < T; ++t) {
        double prefix = kNegInf;
        for (std::size_t j = 0; j < J; ++j) {
          log_gamma[j] = alpha[at(t, j)] + beta[t * J + j] - log_p;
          const double gamma = std::exp(log_gamma[j]);
          prefix = log_add(prefix, log_gamma_prev[j] - R[at(t, j)]);
          const double expected = std::exp(S[at(t, j)] + prefix);
          if (ge) ge[at(t, j)] += up * gamma;
          if (gs) gs[at(t, j)] += up * (gamma - expected);
        }
        log_gamma_prev = log_gamma;
      }
    }
  });
}

}  // namespace reflex
