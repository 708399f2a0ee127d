// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dense_product.hpp"
#include "reflex/errors.hpp"
#include "reflex/tensor.hpp"

namespace reflex::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

DimensionError mismatch(const char* op, const Tensor& a, const Tensor& b) {
  return DimensionError(fmt::format("{}: incompatible shapes {} and {}", op, shape_string(a.shape()),
                                    shape_string(b.shape())));
}

std::size_t last_dim(const Tensor& a, const char* op) {
  if (a.rank() == 0) throw DimensionError(fmt::format("{}: needs rank >= 1, got a scalar", op));
  return a.shape().back();
}

// Adds `src` into the gradient of parent `i` of `node` if it wants one.
template <typename F>
void with_parent_grad(detail::Node& node, std::size_t i, F&& f) {
  auto& parent = *node.parents[i];
  if (parent.requires_grad) f(parent.ensure_grad(), parent);
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  auto in = a.values();
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), fwd);
  return Tensor::make_result(a.shape(), std::move(out), {a}, [deriv](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node& parent) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv(parent.values[i], self.values[i]);
    });
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) throw mismatch("matmul", a, b);
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  std::vector<double> out(static_cast<std::size_t>(m * n));
  MapMat(out.data(), m, n) = internal::product(ConstMapMat(a.values().data(), m, k), ConstMapMat(b.values().data(), k, n));
  return Tensor::make_result({a.dim(0), b.dim(1)}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    ConstMapMat dc(self.grad.data(), m, n);
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      ConstMapMat bv(self.parents[1]->values.data(), k, n);
      MapMat(g.data(), m, k) += internal::product(dc, bv.transpose());
    });
    with_parent_grad(self, 1, [&](std::vector<double>& g, detail::Node&) {
      ConstMapMat av(self.parents[0]->values.data(), m, k);
      MapMat(g.data(), k, n) += internal::product(av.transpose(), dc);
    });
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  auto av = a.values();
  auto bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
      for (std::size_t p = 0; p < 2; ++p) {
        with_parent_grad(self, p, [&](std::vector<double>& g, detail::Node&) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        });
      }
    });
  }
  if (b.rank() == 1 && a.rank() >= 1 && a.shape().back() == b.dim(0)) {
    const std::size_t cols = b.dim(0);
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i % cols];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [cols](detail::Node& self) {
      with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      });
      with_parent_grad(self, 1, [&](std::vector<double>& g, detail::Node&) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % cols] += self.grad[i];
      });
    });
  }
  throw mismatch("add", a, b);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw mismatch("sub", a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
    with_parent_grad(self, 1, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw mismatch("mul", a, b);
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& x = self.parents[0]->values;
    const auto& y = self.parents[1]->values;
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y[i];
    });
    with_parent_grad(self, 1, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x[i];
    });
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ArgumentError("concat: no inputs");
  const Shape lead(parts[0].shape().begin(), parts[0].shape().end() - (parts[0].rank() ? 1 : 0));
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    last_dim(p, "concat");
    if (Shape(p.shape().begin(), p.shape().end() - 1) != lead) throw mismatch("concat", parts[0], p);
    widths.push_back(p.shape().back());
    total += widths.back();
  }
  const std::size_t rows = shape_size(lead);
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto v = parts[p].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * widths[p]), widths[p],
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    }
    offset += widths[p];
  }
  Shape shape = lead;
  shape.push_back(total);
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::make_result(std::move(shape), std::move(out), std::move(parents),
                             [widths, rows, total](detail::Node& self) {
                               std::size_t off = 0;
                               for (std::size_t p = 0; p < widths.size(); ++p) {
                                 with_parent_grad(self, p, [&](std::vector<double>& g, detail::Node&) {
                                   for (std::size_t r = 0; r < rows; ++r) {
                                     for (std::size_t c = 0; c < widths[p]; ++c) {
                                       g[r * widths[p] + c] += self.grad[r * total + off + c];
                                     }
                                   }
                                 });
                                 off += widths[p];
                               }
                             });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  const std::size_t cols = parts[0].rank() == 2 ? parts[0].dim(1) : 0;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols) throw mismatch("concat_rows", parts[0], p);
    rows += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    sizes.push_back(p.size());
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::make_result({rows, cols}, std::move(out), std::move(parents), [sizes](detail::Node& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < sizes.size(); ++p) {
      with_parent_grad(self, p, [&](std::vector<double>& g, detail::Node&) {
        for (std::size_t i = 0; i < sizes[p]; ++i) g[i] += self.grad[off + i];
      });
      off += sizes[p];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() != 2 || begin > end || end > a.dim(0)) {
    throw DimensionError(fmt::format("slice_rows: rows [{}, {}) out of range for {}", begin, end, shape_string(a.shape())));
  }
  const std::size_t cols = a.dim(1);
  auto v = a.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          v.begin() + static_cast<std::ptrdiff_t>(end * cols));
  return Tensor::make_result({end - begin, cols}, std::move(out), {a}, [begin, cols](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * cols + i] += self.grad[i];
    });
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError(fmt::format("reshape: cannot view {} as {}", shape_string(a.shape()), shape_string(shape)));
  }
  return Tensor::make_result(std::move(shape), std::vector<double>(a.values().begin(), a.values().end()), {a},
                             [](detail::Node& self) {
                               with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                               });
                             });
}

Tensor slice(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t width = last_dim(a, "slice");
  if (begin >= end || end > width) {
    throw DimensionError(fmt::format("slice: [{}, {}) out of range for shape {}", begin, end, shape_string(a.shape())));
  }
  const std::size_t rows = a.size() / width;
  const std::size_t out_w = end - begin;
  auto v = a.values();
  std::vector<double> out(rows * out_w);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * width + begin), out_w,
                out.begin() + static_cast<std::ptrdiff_t>(r * out_w));
  }
  Shape shape = a.shape();
  shape.back() = out_w;
  return Tensor::make_result(std::move(shape), std::move(out), {a}, [rows, width, begin, out_w](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < out_w; ++c) g[r * width + begin + c] += self.grad[r * out_w + c];
      }
    });
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor heaviside_st(const Tensor& a) {
  return unary(
      a, [](double x) { return x < 0.0 ? 0.0 : 1.0; }, [](double, double) { return 1.0; });
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t width = last_dim(a, "log_softmax");
  const std::size_t rows = a.size() / width;
  auto v = a.values();
  std::vector<double> out(v.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double s = 0.0;
    for (std::size_t c = 0; c < width; ++c) s += std::exp(x[c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < width; ++c) out[r * width + c] = x[c] - lse;
  }
  return Tensor::make_result(a.shape(), std::move(out), {a}, [rows, width](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t r = 0; r < rows; ++r) {
        double gs = 0.0;
        for (std::size_t c = 0; c < width; ++c) gs += self.grad[r * width + c];
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t i = r * width + c;
          g[i] += self.grad[i] - std::exp(self.values[i]) * gs;
        }
      }
    });
  });
}

Tensor logsumexp(const Tensor& a) {
  const std::size_t width = last_dim(a, "logsumexp");
  const std::size_t rows = a.size() / width;
  auto v = a.values();
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double s = 0.0;
    for (std::size_t c = 0; c < width; ++c) s += std::exp(x[c] - mx);
    out[r] = mx + std::log(s);
  }
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  return Tensor::make_result(std::move(shape), std::move(out), {a}, [rows, width](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node& parent) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t i = r * width + c;
          g[i] += self.grad[r] * std::exp(parent.values[i] - self.values[r]);
        }
      }
    });
  });
}

Tensor sum(const Tensor& a) {
  auto v = a.values();
  double s = 0.0;
  for (double x : v) s += x;
  return Tensor::make_result({}, {s}, {a}, [](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (double& gi : g) gi += self.grad[0];
    });
  });
}

Tensor embedding_lookup(const Tensor& table, std::size_t id) {
  auto rows = embedding_lookup(table, std::span<const std::size_t>(&id, 1));
  const std::size_t width = table.dim(1);
  return Tensor::make_result({width}, std::vector<double>(rows.values().begin(), rows.values().end()), {rows},
                             [](detail::Node& self) {
                               with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                               });
                             });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  if (table.rank() != 2) throw DimensionError("embedding_lookup: table must be 2-D, got " + shape_string(table.shape()));
  if (ids.empty()) throw ArgumentError("embedding_lookup: no ids");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  auto v = table.values();
  std::vector<double> out(ids.size() * width);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw ArgumentError(fmt::format("embedding_lookup: id {} out of range for table of {} rows", ids[r], vocab));
    }
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(ids[r] * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  std::vector<std::size_t> index(ids.begin(), ids.end());
  return Tensor::make_result({ids.size(), width}, std::move(out), {table}, [index, width](detail::Node& self) {
    with_parent_grad(self, 0, [&](std::vector<double>& g, detail::Node&) {
      for (std::size_t r = 0; r < index.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) g[index[r] * width + c] += self.grad[r * width + c];
      }
    });
  });
}

}  // namespace reflex::ad
