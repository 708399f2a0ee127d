// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "reflex/model.hpp"

namespace reflex::internal {

/// One LSTM step over a batch: returns (h', c').
std::pair<ad::Tensor, ad::Tensor> lstm_cell(const LstmParams& p, const ad::Tensor& x, const ad::Tensor& h,
                                            const ad::Tensor& c);

struct EncoderStates {
  std::vector<ad::Tensor> states;  // per position, (B, hidden)
  ad::Tensor final_forward;        // (B, hidden / 2), state after the last real symbol
  ad::Tensor final_backward;       // (B, hidden / 2), state after reading back to position 0
};

/// Same step through the fused update op.
std::pair<ad::Tensor, ad::Tensor> fused_lstm_cell(const LstmParams& p, const ad::Tensor& x, const ad::Tensor& h,
                                                  const ad::Tensor& c);

/// Bidirectional encoder over a padded batch; `z` is (B, lang_dim), already
/// activated. Built from primitive ops.
EncoderStates run_encoder(const TransducerModel& model, const std::vector<const SegmentSeq*>& inputs,
                          const ad::Tensor& z);

/// Decoder start state (h0, c0) from the encoder's final states.
std::pair<ad::Tensor, ad::Tensor> decoder_start(const EncoderStates& enc, std::size_t batch, std::size_t hidden);

void check_input(const TransducerModel& model, const SegmentSeq& x);
void check_output(const TransducerModel& model, const SegmentSeq& y);

}  // namespace reflex::internal
