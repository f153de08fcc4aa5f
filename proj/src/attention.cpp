// SPDX-License-Identifier: Apache-2.0

#include "s2sum/attention.hpp"

namespace s2sum {

AttentionParams AttentionParams::create(ParamStore& params, const std::string& prefix, std::size_t hidden,
                                        std::size_t embedding, std::size_t key_dim, std::size_t attn) {
  AttentionParams p;
  p.w_h = params.add(prefix + ".w_h", {attn, hidden});
  p.w_e = params.add(prefix + ".w_e", {attn, embedding});
  p.w_c = params.add(prefix + ".w_c", {key_dim, attn});
  p.b = params.add(prefix + ".b", {attn}, Init::kZero);
  p.v = params.add(prefix + ".v", {attn});
  return p;
}

Tensor project_keys(Tape& tape, const AttentionParams& p, const Tensor& keys) {
  return ops::matmul(tape, keys, p.w_c);
}

Tensor attention_scores(Tape& tape, const AttentionParams& p, const Tensor& projected_keys, const Tensor& h_prev,
                        const Tensor& e_prev) {
  using namespace ops;
  const Tensor query = add(tape, add(tape, matvec(tape, p.w_h, h_prev), matvec(tape, p.w_e, e_prev)), p.b);
  return matvec(tape, tanh(tape, add_rows(tape, projected_keys, query)), p.v);
}

Tensor context_vector(Tape& tape, const Tensor& weights, const Tensor& states) {
  return ops::vecmat(tape, weights, states);
}

Attended attend_flat(Tape& tape, const AttentionParams& p, const Tensor& projected_keys, const Tensor& states,
                     const Tensor& h_prev, const Tensor& e_prev, std::span<const std::uint8_t> mask) {
  Attended out;
  out.weights = ops::softmax(tape, attention_scores(tape, p, projected_keys, h_prev, e_prev), mask);
  out.context = context_vector(tape, out.weights, states);
  return out;
}

Tensor attend_sentence(Tape& tape, const AttentionParams& p, const Tensor& projected_sentence_keys,
                       const Tensor& h_prev, const Tensor& e_prev) {
  return ops::softmax(tape, attention_scores(tape, p, projected_sentence_keys, h_prev, e_prev));
}

Tensor rescale_hierarchical(Tape& tape, const Tensor& word_weights, const Tensor& sentence_weights,
                            std::span<const int> sent_of_word) {
  if (sent_of_word.size() != word_weights.size()) {
    throw DimensionError("rescale_hierarchical: " + std::to_string(sent_of_word.size()) + " sentence ids for " +
                         shape_string(word_weights.shape()) + " word weights");
  }
  const Tensor expanded = ops::gather(tape, sentence_weights, sent_of_word);
  const Tensor product = ops::mul(tape, word_weights, expanded);
  double total = 0.0;
  for (double v : product.values()) total += v;
  if (!(total > 0.0)) throw DegenerateAttentionError("rescale_hierarchical: every word/sentence product is zero");
  return ops::normalize(tape, product);
}

Tensor masked_exp(Tape& tape, const Tensor& scores, std::span<const std::uint8_t> mask) {
  Tensor e = ops::exp(tape, scores);
  if (mask.empty()) return e;
  std::vector<double> keep(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) keep[i] = mask[i] ? 1.0 : 0.0;
  return ops::mul(tape, e, Tensor::vector(std::move(keep)));
}

Tensor temporal_rescale(Tape& tape, const Tensor& alpha_raw, AttentionTrace& trace, std::span<const std::uint8_t> mask) {
  const std::size_t n = alpha_raw.size();
  Tensor ratio;
  if (!trace.beta.defined()) {
    ratio = alpha_raw;
  } else {
    if (trace.beta.size() != n) {
      throw DimensionError("temporal_rescale: trace " + shape_string(trace.beta.shape()) + " vs scores " +
                           shape_string(alpha_raw.shape()));
    }
    Tensor denom = trace.beta;
    if (!mask.empty()) {
      // Masked positions have α' = 0 at every step; a unit offset keeps 0/β at 0.
      std::vector<double> offset(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) offset[i] = mask[i] ? 0.0 : 1.0;
      denom = ops::add(tape, denom, Tensor::vector(std::move(offset)));
    }
    ratio = ops::div(tape, alpha_raw, denom);
  }
  const Tensor weights = ops::normalize(tape, ratio);
  trace.beta = trace.beta.defined() ? ops::add(tape, trace.beta, alpha_raw) : alpha_raw;
  trace.history.push_back(alpha_raw);
  return weights;
}

}  // namespace s2sum
