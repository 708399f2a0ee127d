// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense float64 tensors with reverse-mode differentiation.
 *
 * A Tensor is a cheap handle onto an immutable node of a computation graph.
 * Every op allocates a fresh result node that remembers its parents and a
 * closure which pushes the result's gradient back into them. Calling
 * backward() on a scalar walks the graph in reverse topological order.
 *
 * Only leaves created with `requires_grad = true` (model parameters) carry
 * gradients across calls; intermediate gradients die with the graph.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reflex::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<const double> values() const;
  double item() const;
  double at(std::size_t flat_index) const { return values()[flat_index]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;

  /// Parameter access for optimizers and initializers. Never use on a node
  /// that is part of a live graph.
  std::span<double> mutable_values();
  std::span<double> mutable_grad();
  void zero_grad();

  /// Fresh leaf holding a copy of the values (no provenance, no gradient).
  Tensor detach() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const noexcept { return node_; }

  /// Build an op result. Used by fused ops outside this module.
  static Tensor make_result(Shape shape, std::vector<double> values,
                            std::vector<Tensor> parents,
                            std::function<void(detail::Node&)> backward);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;
};

/// Accumulate d(loss)/d(leaf) into every reachable leaf that requires grad.
/// `loss` must hold exactly one element.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Forward ops. All of them record provenance and never mutate inputs.

/// (m,k) x (k,n) -> (m,n).
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise sum. `b` may also be a vector matching the last axis of `a`,
/// in which case it is added to every row.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// Concatenate along the last axis. Leading extents must agree.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);
/// Concatenate 2-D tensors along the first axis.
Tensor concat_rows(std::span<const Tensor> parts);

/// Rows [begin, end) of a 2-D tensor.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);

/// Same values under a new shape of equal size.
Tensor reshape(const Tensor& a, Shape shape);

/// Columns [begin, end) of the last axis.
Tensor slice(const Tensor& a, std::size_t begin, std::size_t end);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
/// Heaviside step forward (x < 0 -> 0, x >= 0 -> 1); identity backward.
Tensor heaviside_st(const Tensor& a);

Tensor log_softmax(const Tensor& a);
/// Reduces the last axis.
Tensor logsumexp(const Tensor& a);
/// Sum of every element; scalar result.
Tensor sum(const Tensor& a);

/// Row `id` of a 2-D table, shape (D).
Tensor embedding_lookup(const Tensor& table, std::size_t id);
/// Rows `ids` of a 2-D table, shape (|ids|, D).
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);

}  // namespace reflex::ad
