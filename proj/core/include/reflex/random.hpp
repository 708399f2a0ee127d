// SPDX-License-Identifier: Apache-2.0
/**
 * @file   random.hpp
 * @brief  Seeded random streams that reproduce across platforms.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. Distributions come from Boost.Random (identical code on every
 * platform) rather than <random>, whose distributions are
 * implementation-defined.
 */
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "reflex/tensor.hpp"

namespace reflex {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  double normal(double mean, double stddev);
  /// Beta(a, b); stays finite for shape parameters far below 1.
  double beta(double a, double b);
  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[index(i)]);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent child seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Uniform on +-sqrt(6 / (fan_in + fan_out)). Rank-2 shapes use (rows, cols)
/// as fans, rank-1 shapes use (n, n), and a scalar uses (1, 1).
ad::Tensor glorot_init(const ad::Shape& shape, Rng& rng, bool requires_grad = true);

}  // namespace reflex
