// SPDX-License-Identifier: Apache-2.0
/**
 * @file   lstm_ops.hpp
 * @brief  Fused LSTM state update used by the batched training path.
 */
#pragma once

#include <vector>

#include "reflex/tensor.hpp"

namespace reflex {

/// One LSTM update from gate pre-activations.
///
/// `pre` is (B, 4H) without bias, gate order i, f, g, o; `bias` is (4H);
/// `h` and `c` are (B, H). Rows with `row_mask[b] == 0` carry (h, c) through
/// unchanged. An empty mask means every row is live.
///
/// Returns (B, 2H): [h' | c'].
ad::Tensor lstm_update(const ad::Tensor& pre, const ad::Tensor& bias, const ad::Tensor& h, const ad::Tensor& c,
                       const std::vector<double>& row_mask = {});

}  // namespace reflex
