// SPDX-License-Identifier: Apache-2.0
#include "reflex/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "model_internal.hpp"
#include "reflex/alignment_ops.hpp"
#include "reflex/errors.hpp"
#include "reflex/lstm_ops.hpp"
#include "reflex/random.hpp"

namespace reflex {

std::string_view to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::kDense:
      return "dense";
    case EmbeddingMode::kSigmoid:
      return "sigmoid";
    case EmbeddingMode::kStraightThrough:
      return "st";
  }
  return "?";
}

EmbeddingMode parse_embedding_mode(std::string_view text) {
  if (text == "dense") return EmbeddingMode::kDense;
  if (text == "sigmoid") return EmbeddingMode::kSigmoid;
  if (text == "st" || text == "straight-through") return EmbeddingMode::kStraightThrough;
  throw ArgumentError(fmt::format("unknown embedding mode '{}' (expected dense, sigmoid or st)", text));
}

void ModelConfig::validate() const {
  if (lang_dim == 0 || emb_dim == 0 || hidden_dim == 0) throw ArgumentError("model dimensions must be positive");
  if (hidden_dim % 2 != 0) throw ArgumentError("hidden_dim must be even (two encoder directions)");
  if (max_decode_len == 0) throw ArgumentError("max_decode_len must be positive");
}

std::vector<std::pair<std::string, ad::Tensor>> ModelParameters::named() const {
  return {
      {"language_table", language_table},
      {"fusion", fusion},
      {"encoder_forward.weight", encoder_forward.weight},
      {"encoder_forward.bias", encoder_forward.bias},
      {"encoder_backward.weight", encoder_backward.weight},
      {"encoder_backward.bias", encoder_backward.bias},
      {"output_embedding", output_embedding},
      {"decoder.weight", decoder.weight},
      {"decoder.bias", decoder.bias},
      {"attention", attention},
      {"emit_decoder", emit_decoder},
      {"emit_encoder", emit_encoder},
      {"emit_bias", emit_bias},
      {"output_weight", output_weight},
      {"output_bias", output_bias},
  };
}

namespace {

LstmParams make_lstm(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.weight = glorot_init({input + hidden, 4 * hidden}, rng);
  std::vector<double> bias(4 * hidden, 0.0);
  std::fill(bias.begin() + static_cast<std::ptrdiff_t>(hidden), bias.begin() + static_cast<std::ptrdiff_t>(2 * hidden),
            1.0);  // forget gate
  p.bias = ad::Tensor::from({4 * hidden}, std::move(bias), true);
  return p;
}

}  // namespace

TransducerModel::TransducerModel(ModelConfig config, Vocabulary input_vocab, Vocabulary output_vocab,
                                 std::vector<std::string> languages)
    : config_(config),
      input_vocab_(std::move(input_vocab)),
      output_vocab_(std::move(output_vocab)),
      languages_(std::move(languages)) {
  config_.validate();
  if (languages_.empty()) throw ArgumentError("model needs at least one language");
  if (input_vocab_.size() == 0) throw ArgumentError("model needs a non-empty input vocabulary");
  if (!output_vocab_.has_reserved()) throw ArgumentError("output vocabulary must reserve PAD/BOS/EOS");

  Rng rng(config_.seed);
  const std::size_t L = languages_.size();
  const std::size_t Dl = config_.lang_dim;
  const std::size_t De = config_.emb_dim;
  const std::size_t H = config_.hidden_dim;
  const std::size_t Vin = input_vocab_.size();
  const std::size_t Vout = output_vocab_.size();

  params_.language_table = glorot_init({L, Dl}, rng);
  params_.fusion = glorot_init({Vin + Dl, De}, rng);
  params_.encoder_forward = make_lstm(De, H / 2, rng);
  params_.encoder_backward = make_lstm(De, H / 2, rng);
  params_.output_embedding = glorot_init({Vout, De}, rng);
  params_.decoder = make_lstm(De, H, rng);
  params_.attention = glorot_init({H, H}, rng);
  params_.emit_decoder = glorot_init({H, H}, rng);
  params_.emit_encoder = glorot_init({H, H}, rng);
  params_.emit_bias = ad::Tensor::zeros({H}, true);
  params_.output_weight = glorot_init({H, Vout}, rng);
  params_.output_bias = ad::Tensor::zeros({Vout}, true);
}

TransducerModel::TransducerModel(ModelConfig config, const Corpus& corpus)
    : TransducerModel(config, corpus.input_vocab(), corpus.output_vocab(), corpus.languages()) {}

TransducerModel TransducerModel::clone() const {
  TransducerModel copy(config_, input_vocab_, output_vocab_, languages_);
  auto src = params_.named();
  auto dst = copy.params_.named();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].second.values();
    std::copy(from.begin(), from.end(), dst[i].second.mutable_values().begin());
  }
  return copy;
}

LanguageId TransducerModel::language_id(std::string_view name) const {
  auto it = std::find(languages_.begin(), languages_.end(), name);
  if (it == languages_.end()) throw ArgumentError(fmt::format("unknown language '{}'", name));
  return static_cast<LanguageId>(it - languages_.begin());
}

void TransducerModel::check_language(LanguageId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= languages_.size()) {
    throw ArgumentError(fmt::format("language id {} not in the model's table of {}", id, languages_.size()));
  }
}

std::vector<ad::Tensor> TransducerModel::parameter_list() const {
  std::vector<ad::Tensor> out;
  for (auto& [name, t] : params_.named()) out.push_back(t);
  return out;
}

ad::Tensor activate_embedding(EmbeddingMode mode, const ad::Tensor& raw) {
  switch (mode) {
    case EmbeddingMode::kDense:
      return raw;
    case EmbeddingMode::kSigmoid:
      return ad::sigmoid(raw);
    case EmbeddingMode::kStraightThrough:
      return ad::heaviside_st(raw);
  }
  return raw;
}

ad::Tensor read_language_embedding(const TransducerModel& model, LanguageId language) {
  model.check_language(language);
  return activate_embedding(model.mode(),
                            ad::embedding_lookup(model.params().language_table, static_cast<std::size_t>(language)));
}

namespace internal {

std::pair<ad::Tensor, ad::Tensor> lstm_cell(const LstmParams& p, const ad::Tensor& x, const ad::Tensor& h,
                                            const ad::Tensor& c) {
  const std::size_t H = h.dim(1);
  auto gates = ad::add(ad::matmul(ad::concat({x, h}), p.weight), p.bias);
  auto i = ad::sigmoid(ad::slice(gates, 0, H));
  auto f = ad::sigmoid(ad::slice(gates, H, 2 * H));
  auto g = ad::tanh(ad::slice(gates, 2 * H, 3 * H));
  auto o = ad::sigmoid(ad::slice(gates, 3 * H, 4 * H));
  auto c_next = ad::add(ad::mul(f, c), ad::mul(i, g));
  auto h_next = ad::mul(o, ad::tanh(c_next));
  return {h_next, c_next};
}

void check_input(const TransducerModel& model, const SegmentSeq& x) {
  if (x.empty()) throw ArgumentError("input sequence is empty");
  for (auto id : x) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.input_vocab().size()) {
      throw ArgumentError(fmt::format("input segment id {} is outside the input vocabulary", id));
    }
  }
}

void check_output(const TransducerModel& model, const SegmentSeq& y) {
  if (y.empty()) throw ArgumentError("output sequence is empty");
  for (auto id : y) {
    if (id <= Vocabulary::kEos || static_cast<std::size_t>(id) >= model.output_vocab().size()) {
      throw ArgumentError(fmt::format("output segment id {} is reserved or outside the output vocabulary", id));
    }
  }
}

namespace {

// Blend h' into h where the row mask is 1; rows with mask 0 keep h.
ad::Tensor masked(const ad::Tensor& next, const ad::Tensor& prev, const std::vector<double>& row_mask, bool all_on) {
  if (all_on) return next;
  const std::size_t rows = next.dim(0);
  const std::size_t cols = next.dim(1);
  std::vector<double> keep(rows * cols);
  std::vector<double> hold(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::fill_n(keep.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, row_mask[r]);
    std::fill_n(hold.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, 1.0 - row_mask[r]);
  }
  return ad::add(ad::mul(ad::Tensor::from({rows, cols}, std::move(keep)), next),
                 ad::mul(ad::Tensor::from({rows, cols}, std::move(hold)), prev));
}

}  // namespace

std::pair<ad::Tensor, ad::Tensor> fused_lstm_cell(const LstmParams& p, const ad::Tensor& x, const ad::Tensor& h,
                                                  const ad::Tensor& c) {
  const std::size_t H = h.dim(1);
  auto hc = lstm_update(ad::matmul(ad::concat({x, h}), p.weight), p.bias, h, c);
  return {ad::slice(hc, 0, H), ad::slice(hc, H, 2 * H)};
}

EncoderStates run_encoder(const TransducerModel& model, const std::vector<const SegmentSeq*>& inputs,
                          const ad::Tensor& z) {
  const auto& P = model.params();
  const std::size_t B = inputs.size();
  const std::size_t Vin = model.input_vocab().size();
  const std::size_t half = model.config().hidden_dim / 2;
  std::size_t J = 0;
  for (const auto* x : inputs) {
    check_input(model, *x);
    J = std::max(J, x->size());
  }

  // Per-position inputs: [one_hot(x_j) ; z] W_f.
  std::vector<ad::Tensor> inputs_at(J);
  std::vector<std::vector<double>> masks(J, std::vector<double>(B, 0.0));
  std::vector<bool> full(J, true);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> one_hot(B * Vin, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      if (j < inputs[b]->size()) {
        one_hot[b * Vin + static_cast<std::size_t>((*inputs[b])[j])] = 1.0;
        masks[j][b] = 1.0;
      } else {
        full[j] = false;
      }
    }
    inputs_at[j] = ad::matmul(ad::concat({ad::Tensor::from({B, Vin}, std::move(one_hot)), z}), P.fusion);
  }

  std::vector<ad::Tensor> fwd(J);
  std::vector<ad::Tensor> bwd(J);
  auto h = ad::Tensor::zeros({B, half});
  auto c = ad::Tensor::zeros({B, half});
  auto step = [&](const LstmParams& p, std::size_t j) {
    auto [hn, cn] = lstm_cell(p, inputs_at[j], h, c);
    h = masked(hn, h, masks[j], full[j]);
    c = masked(cn, c, masks[j], full[j]);
  };
  for (std::size_t j = 0; j < J; ++j) {
    step(P.encoder_forward, j);
    fwd[j] = h;
  }
  EncoderStates out;
  out.final_forward = h;
  h = ad::Tensor::zeros({B, half});
  c = ad::Tensor::zeros({B, half});
  for (std::size_t j = J; j-- > 0;) {
    step(P.encoder_backward, j);
    bwd[j] = h;
  }
  out.final_backward = h;
  out.states.reserve(J);
  for (std::size_t j = 0; j < J; ++j) out.states.push_back(ad::concat({fwd[j], bwd[j]}));
  return out;
}

std::pair<ad::Tensor, ad::Tensor> decoder_start(const EncoderStates& enc, std::size_t batch, std::size_t hidden) {
  return {ad::concat({enc.final_forward, enc.final_backward}), ad::Tensor::zeros({batch, hidden})};
}

}  // namespace internal

ad::Tensor encode_with_embedding(const TransducerModel& model, const SegmentSeq& x, const ad::Tensor& z) {
  if (z.shape() != ad::Shape{model.config().lang_dim}) {
    throw DimensionError(fmt::format("language vector must have shape ({}), got {}", model.config().lang_dim,
                                     ad::shape_string(z.shape())));
  }
  auto enc = internal::run_encoder(model, {&x}, ad::reshape(z, {1, model.config().lang_dim}));
  return ad::concat_rows(enc.states);
}

ad::Tensor encode(const TransducerModel& model, const SegmentSeq& x, LanguageId language) {
  return encode_with_embedding(model, x, read_language_embedding(model, language));
}

namespace {

// Batch indices by decreasing length; ties keep batch order.
std::vector<std::size_t> longest_first(const std::vector<std::size_t>& lengths) {
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] > lengths[b]; });
  return order;
}

// Fills offsets/ranks for a packed time-major layout and returns the live
// row count per step.
std::vector<std::size_t> pack(const std::vector<std::size_t>& lengths, std::size_t steps,
                              const std::vector<std::size_t>& order, std::vector<std::size_t>& offset,
                              std::vector<std::size_t>& rank, std::size_t& rows) {
  rank.assign(lengths.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  std::vector<std::size_t> live(steps, 0);
  for (auto len : lengths) {
    for (std::size_t t = 0; t < len; ++t) ++live[t];
  }
  offset.assign(steps, 0);
  rows = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    offset[t] = rows;
    rows += live[t];
  }
  return live;
}

// Keeps rows [n, B) of `state` and replaces the first n with `head`.
ad::Tensor replace_head(const ad::Tensor& head, const ad::Tensor& state) {
  const std::size_t n = head.dim(0);
  if (n == state.dim(0)) return head;
  return ad::concat_rows(std::vector<ad::Tensor>{head, ad::slice_rows(state, n, state.dim(0))});
}

ad::Tensor head(const ad::Tensor& state, std::size_t n) {
  return n == state.dim(0) ? state : ad::slice_rows(state, 0, n);
}

}  // namespace

// Training path. Sequences are packed longest-first so that each recurrent
// step only touches the rows still running; the fused input W_f[x_j] +
// z W_f' equals [one_hot(x_j) ; z] W_f.
ad::Tensor batch_log_likelihood(const TransducerModel& model, std::span<const CognatePair* const> batch) {
  if (batch.empty()) throw ArgumentError("batch_log_likelihood: empty batch");
  const auto& P = model.params();
  const std::size_t B = batch.size();
  const std::size_t H = model.config().hidden_dim;
  const std::size_t half = H / 2;
  const std::size_t Vin = model.input_vocab().size();
  const std::size_t Dl = model.config().lang_dim;

  BatchLayout layout;
  layout.batch = B;
  for (const auto* pair : batch) {
    model.check_language(pair->language);
    internal::check_input(model, pair->etymon);
    internal::check_output(model, pair->reflex);
    layout.steps.push_back(pair->reflex.size() + 1);
    layout.positions.push_back(pair->etymon.size());
  }
  layout.max_steps = *std::max_element(layout.steps.begin(), layout.steps.end());
  layout.max_positions = *std::max_element(layout.positions.begin(), layout.positions.end());
  const std::size_t T = layout.max_steps;
  const std::size_t J = layout.max_positions;
  const auto x_order = longest_first(layout.positions);
  const auto y_order = longest_first(layout.steps);
  const auto enc_live = pack(layout.positions, J, x_order, layout.enc_offset, layout.enc_rank, layout.enc_rows);
  const auto dec_live = pack(layout.steps, T, y_order, layout.dec_offset, layout.dec_rank, layout.dec_rows);

  // Encoder, rows in x_order.
  std::vector<std::size_t> languages(B);
  for (std::size_t r = 0; r < B; ++r) languages[r] = static_cast<std::size_t>(batch[x_order[r]]->language);
  auto z = activate_embedding(model.mode(), ad::embedding_lookup(P.language_table, languages));
  auto z_proj = ad::matmul(z, ad::slice_rows(P.fusion, Vin, Vin + Dl));
  std::vector<ad::Tensor> fused(J);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<std::size_t> ids(enc_live[j]);
    for (std::size_t r = 0; r < enc_live[j]; ++r) ids[r] = static_cast<std::size_t>(batch[x_order[r]]->etymon[j]);
    fused[j] = ad::add(ad::embedding_lookup(P.fusion, ids), head(z_proj, enc_live[j]));
  }

  std::vector<ad::Tensor> fwd(J);
  std::vector<ad::Tensor> bwd(J);
  auto h = ad::Tensor::zeros({B, half});
  auto c = ad::Tensor::zeros({B, half});
  for (std::size_t j = 0; j < J; ++j) {
    auto [hn, cn] = internal::fused_lstm_cell(P.encoder_forward, fused[j], head(h, enc_live[j]), head(c, enc_live[j]));
    fwd[j] = hn;
    h = replace_head(hn, h);
    c = replace_head(cn, c);
  }
  auto final_forward = h;
  h = ad::Tensor::zeros({B, half});
  c = ad::Tensor::zeros({B, half});
  for (std::size_t j = J; j-- > 0;) {
    auto [hn, cn] = internal::fused_lstm_cell(P.encoder_backward, fused[j], head(h, enc_live[j]), head(c, enc_live[j]));
    bwd[j] = hn;
    h = replace_head(hn, h);
    c = replace_head(cn, c);
  }
  std::vector<ad::Tensor> enc_states;
  enc_states.reserve(J);
  for (std::size_t j = 0; j < J; ++j) enc_states.push_back(ad::concat({fwd[j], bwd[j]}));

  // Decoder, rows in y_order.
  std::vector<std::size_t> to_x(B);
  for (std::size_t r = 0; r < B; ++r) to_x[r] = layout.enc_rank[y_order[r]];
  h = ad::embedding_lookup(ad::concat({final_forward, h}), to_x);
  c = ad::Tensor::zeros({B, H});

  std::vector<SegmentId> targets(B * T, Vocabulary::kPad);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& y = batch[b]->reflex;
    std::copy(y.begin(), y.end(), targets.begin() + static_cast<std::ptrdiff_t>(b * T));
    targets[b * T + y.size()] = Vocabulary::kEos;
  }
  std::vector<ad::Tensor> dec_states;
  dec_states.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::size_t> prev(dec_live[t]);
    for (std::size_t r = 0; r < dec_live[t]; ++r) {
      prev[r] = t == 0 ? Vocabulary::kBos : static_cast<std::size_t>(batch[y_order[r]]->reflex[t - 1]);
    }
    std::tie(h, c) = internal::fused_lstm_cell(P.decoder, ad::embedding_lookup(P.output_embedding, prev),
                                               head(h, dec_live[t]), head(c, dec_live[t]));
    dec_states.push_back(h);
  }

  auto enc_all = ad::concat_rows(enc_states);
  auto dec_all = ad::concat_rows(dec_states);
  auto dec_proj = ad::add(ad::matmul(dec_all, P.emit_decoder), P.emit_bias);
  auto enc_proj = ad::matmul(enc_all, P.emit_encoder);
  auto queries = ad::matmul(dec_all, P.attention);

  auto emission = pairwise_emission(dec_proj, enc_proj, P.output_weight, P.output_bias, layout, targets);
  auto scores = pairwise_scores(queries, enc_all, layout);
  return monotonic_marginal(emission, scores, layout);
}

double sequence_log_likelihood(const TransducerModel& model, const SegmentSeq& x, const SegmentSeq& y,
                               LanguageId language) {
  CognatePair pair{language, x, y};
  const CognatePair* batch[] = {&pair};
  return batch_log_likelihood(model, batch).item();
}

}  // namespace reflex
