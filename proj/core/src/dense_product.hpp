// SPDX-License-Identifier: Apache-2.0
// Eigen products over row-major float64 blocks.
#pragma once

#include <Eigen/Core>

namespace reflex::internal {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// a * b computed on owned copies. Eigen chooses its vectorised paths from
/// pointer alignment, and those paths sum in different orders; the copies
/// are always aligned, so the result depends only on the values.
template <typename A, typename B>
RowMat product(const A& a, const B& b) {
  const RowMat lhs = a;
  const RowMat rhs = b;
  RowMat out(lhs.rows(), rhs.cols());
  out.noalias() = lhs * rhs;
  return out;
}

}  // namespace reflex::internal
