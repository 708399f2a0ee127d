// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "corpora.hpp"
#include "oracles.hpp"
#include "reflex/errors.hpp"
#include "reflex/model.hpp"
#include "reflex/training.hpp"

using namespace reflex;

namespace {

ModelConfig small_config(EmbeddingMode mode, std::uint64_t seed = 1) {
  ModelConfig c;
  c.lang_dim = 3;
  c.emb_dim = 3;
  c.hidden_dim = 4;
  c.mode = mode;
  c.seed = seed;
  return c;
}

std::vector<const CognatePair*> first_pairs(const Corpus& corpus, std::size_t n) {
  std::vector<const CognatePair*> out;
  for (std::size_t i = 0; i < n && i < corpus.size(); ++i) out.push_back(&corpus.pairs()[i]);
  return out;
}

void copy_parameters(const TransducerModel& from, TransducerModel& to) {
  const auto src = from.params().named();
  auto dst = to.params().named();
  REQUIRE(src.size() == dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto out = dst[i].second.mutable_values();
    std::copy(src[i].second.values().begin(), src[i].second.values().end(), out.begin());
  }
}

}  // namespace

TEST_CASE("config validation and mode names") {
  CHECK_NOTHROW(small_config(EmbeddingMode::kDense).validate());
  auto odd = small_config(EmbeddingMode::kDense);
  odd.hidden_dim = 5;
  CHECK_THROWS_AS(odd.validate(), ArgumentError);
  CHECK(parse_embedding_mode("st") == EmbeddingMode::kStraightThrough);
  CHECK(parse_embedding_mode("straight-through") == EmbeddingMode::kStraightThrough);
  CHECK(parse_embedding_mode("sigmoid") == EmbeddingMode::kSigmoid);
  CHECK(parse_embedding_mode(to_string(EmbeddingMode::kDense)) == EmbeddingMode::kDense);
  CHECK_THROWS_AS(parse_embedding_mode("binary"), ArgumentError);
}

TEST_CASE("parameter shapes follow the configuration") {
  const auto corpus = testing::tiny_corpus();
  const TransducerModel m(small_config(EmbeddingMode::kDense), corpus);
  const auto& p = m.params();
  const std::size_t Vin = corpus.input_vocab().size();
  const std::size_t Vout = corpus.output_vocab().size();
  CHECK(p.language_table.shape() == ad::Shape{2, 3});
  CHECK(p.fusion.shape() == ad::Shape{Vin + 3, 3});
  CHECK(p.encoder_forward.weight.shape() == ad::Shape{3 + 2, 8});
  CHECK(p.decoder.weight.shape() == ad::Shape{3 + 4, 16});
  CHECK(p.output_weight.shape() == ad::Shape{4, Vout});
  // Same seed, same initial parameters.
  const TransducerModel again(small_config(EmbeddingMode::kDense), corpus);
  for (std::size_t i = 0; i < p.named().size(); ++i) {
    const auto a = p.named()[i].second.values();
    const auto b = again.params().named()[i].second.values();
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  const auto c = m.clone();
  CHECK(c.params().fusion.node() != m.params().fusion.node());
}

TEST_CASE("embedding modes read the language table through their activation") {
  const auto raw = ad::Tensor::from({3}, {-0.5, 0.0, 2.0});
  const auto dense = activate_embedding(EmbeddingMode::kDense, raw);
  const auto sig = activate_embedding(EmbeddingMode::kSigmoid, raw);
  const auto st = activate_embedding(EmbeddingMode::kStraightThrough, raw);
  CHECK(dense.at(0) == -0.5);
  CHECK(sig.at(2) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(st.at(0) == 0.0);
  CHECK(st.at(1) == 1.0);
  CHECK(st.at(2) == 1.0);
}

TEST_CASE("training loss gradients match finite differences") {
  const auto corpus = testing::tiny_corpus(12, 5);
  const auto batch = first_pairs(corpus, 4);
  for (auto mode : {EmbeddingMode::kDense, EmbeddingMode::kSigmoid}) {
    CAPTURE(to_string(mode));
    const TransducerModel m(small_config(mode, 3), corpus);
    const auto r = testing::check_gradients([&] { return batch_loss(m, batch); }, m.parameter_list());
    INFO(r.worst);
    CHECK(r.checked > 100);
    CHECK(r.max_rel_error < 1e-6);
  }
}

TEST_CASE("straight-through gradient equals the gradient at the binarised embedding") {
  const auto corpus = testing::tiny_corpus(12, 5);
  const auto batch = first_pairs(corpus, 6);
  TransducerModel st(small_config(EmbeddingMode::kStraightThrough, 4), corpus);
  TransducerModel dense(small_config(EmbeddingMode::kDense, 4), corpus);
  copy_parameters(st, dense);
  // The dense surrogate reads the 0/1 values directly.
  auto table = dense.params().language_table.mutable_values();
  for (auto& v : table) v = v >= 0.0 ? 1.0 : 0.0;

  CHECK(batch_loss(st, batch).item() == doctest::Approx(batch_loss(dense, batch).item()).epsilon(1e-13));
  for (auto t : st.parameter_list()) t.zero_grad();
  for (auto t : dense.parameter_list()) t.zero_grad();
  ad::backward(batch_loss(st, batch));
  ad::backward(batch_loss(dense, batch));
  const auto a = st.params().language_table.grad();
  const auto b = dense.params().language_table.grad();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("bad inputs are rejected") {
  const auto corpus = testing::tiny_corpus();
  const TransducerModel m(small_config(EmbeddingMode::kDense), corpus);
  CHECK_THROWS_AS(encode(m, {}, 0), ArgumentError);
  CHECK_THROWS_AS(encode(m, {9999}, 0), ArgumentError);
  CHECK_THROWS_AS(encode(m, {0}, 7), ArgumentError);
  CHECK_THROWS_AS(sequence_log_likelihood(m, {0}, {Vocabulary::kEos}, 0), ArgumentError);
  CHECK_THROWS_AS(encode_with_embedding(m, {0}, ad::Tensor::zeros({5})), DimensionError);
  CHECK_THROWS_AS(m.language_id("nope"), ArgumentError);
}
