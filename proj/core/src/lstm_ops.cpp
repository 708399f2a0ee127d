// SPDX-License-Identifier: Apache-2.0
#include "reflex/lstm_ops.hpp"

#include <fmt/format.h>

#include <cmath>
#include <memory>

#include "reflex/errors.hpp"

namespace reflex {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ad::Tensor lstm_update(const ad::Tensor& pre, const ad::Tensor& bias, const ad::Tensor& h, const ad::Tensor& c,
                       const std::vector<double>& row_mask) {
  if (h.rank() != 2 || c.shape() != h.shape()) {
    throw DimensionError(fmt::format("lstm_update: h {} and c {} must be equal 2-D shapes", ad::shape_string(h.shape()),
                                     ad::shape_string(c.shape())));
  }
  const std::size_t B = h.dim(0);
  const std::size_t H = h.dim(1);
  if (pre.shape() != ad::Shape{B, 4 * H} || bias.shape() != ad::Shape{4 * H}) {
    throw DimensionError(fmt::format("lstm_update: pre {} / bias {} do not fit hidden width {}",
                                     ad::shape_string(pre.shape()), ad::shape_string(bias.shape()), H));
  }
  if (!row_mask.empty() && row_mask.size() != B) throw DimensionError("lstm_update: mask length must equal the batch");

  // Saved activations: i, f, g, o, tanh(c') per element.
  auto saved = std::make_shared<std::vector<double>>(B * H * 5);
  std::vector<double> out(B * 2 * H);
  auto p = pre.values();
  auto bv = bias.values();
  auto hv = h.values();
  auto cv = c.values();
  for (std::size_t r = 0; r < B; ++r) {
    const bool live = row_mask.empty() || row_mask[r] != 0.0;
    for (std::size_t k = 0; k < H; ++k) {
      const std::size_t base = r * 4 * H;
      double* s = saved->data() + (r * H + k) * 5;
      if (!live) {
        out[r * 2 * H + k] = hv[r * H + k];
        out[r * 2 * H + H + k] = cv[r * H + k];
        continue;
      }
      const double i = sigmoid(p[base + k] + bv[k]);
      const double f = sigmoid(p[base + H + k] + bv[H + k]);
      const double g = std::tanh(p[base + 2 * H + k] + bv[2 * H + k]);
      const double o = sigmoid(p[base + 3 * H + k] + bv[3 * H + k]);
      const double cn = f * cv[r * H + k] + i * g;
      const double tc = std::tanh(cn);
      s[0] = i;
      s[1] = f;
      s[2] = g;
      s[3] = o;
      s[4] = tc;
      out[r * 2 * H + k] = o * tc;
      out[r * 2 * H + H + k] = cn;
    }
  }

  return ad::Tensor::make_result(
      {B, 2 * H}, std::move(out), {pre, bias, h, c}, [B, H, saved, row_mask](ad::detail::Node& self) {
        auto& pre_n = *self.parents[0];
        auto& bias_n = *self.parents[1];
        auto& h_n = *self.parents[2];
        auto& c_n = *self.parents[3];
        double* dpre = pre_n.requires_grad ? pre_n.ensure_grad().data() : nullptr;
        double* dbias = bias_n.requires_grad ? bias_n.ensure_grad().data() : nullptr;
        double* dh = h_n.requires_grad ? h_n.ensure_grad().data() : nullptr;
        double* dc = c_n.requires_grad ? c_n.ensure_grad().data() : nullptr;
        const auto& grad = self.grad;
        for (std::size_t r = 0; r < B; ++r) {
          const bool live = row_mask.empty() || row_mask[r] != 0.0;
          for (std::size_t k = 0; k < H; ++k) {
            const double gh = grad[r * 2 * H + k];
            const double gc = grad[r * 2 * H + H + k];
            if (!live) {
              if (dh) dh[r * H + k] += gh;
              if (dc) dc[r * H + k] += gc;
              continue;
            }
            const double* s = saved->data() + (r * H + k) * 5;
            const double i = s[0], f = s[1], g = s[2], o = s[3], tc = s[4];
            const double dcn = gc + gh * o * (1.0 - tc * tc);
            const double d_i = dcn * g * i * (1.0 - i);
            const double d_f = dcn * c_n.values[r * H + k] * f * (1.0 - f);
            const double d_g = dcn * i * (1.0 - g * g);
            const double d_o = gh * tc * o * (1.0 - o);
            if (dc) dc[r * H + k] += dcn * f;
            const std::size_t base = r * 4 * H;
            if (dpre) {
              dpre[base + k] += d_i;
              dpre[base + H + k] += d_f;
              dpre[base + 2 * H + k] += d_g;
              dpre[base + 3 * H + k] += d_o;
            }
            if (dbias) {
              dbias[k] += d_i;
              dbias[H + k] += d_f;
              dbias[2 * H + k] += d_g;
              dbias[3 * H + k] += d_o;
            }
          }
        }
      });
}

}  // namespace reflex
