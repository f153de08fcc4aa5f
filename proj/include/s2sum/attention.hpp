// SPDX-License-Identifier: Apache-2.0
//
// Attention over source positions: additive scoring, hierarchical
// word/sentence re-normalization, and temporal down-weighting.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2sum/params.hpp"
#include "s2sum/tensor.hpp"

namespace s2sum {

/// score_j = v · tanh(W_h h_prev + W_e e_prev + W_c key_j + b)
struct AttentionParams {
  Tensor w_h;  // [A x H]
  Tensor w_e;  // [A x d_w]
  Tensor w_c;  // [key_dim x A], applied to a [N x key_dim] key matrix
  Tensor b;    // [A]
  Tensor v;    // [A]

  static AttentionParams create(ParamStore& params, const std::string& prefix, std::size_t hidden,
                                std::size_t embedding, std::size_t key_dim, std::size_t attn);
};

/// Projects every key row once per document: [N x key_dim] -> [N x A].
Tensor project_keys(Tape& tape, const AttentionParams& p, const Tensor& keys);

/// Unnormalized scores, one per key row.
Tensor attention_scores(Tape& tape, const AttentionParams& p, const Tensor& projected_keys, const Tensor& h_prev,
                        const Tensor& e_prev);

struct Attended {
  Tensor weights;  // [N]
  Tensor context;  // [key_dim]
};

/// Softmax attention over word states; masked positions get zero weight.
Attended attend_flat(Tape& tape, const AttentionParams& p, const Tensor& projected_keys, const Tensor& states,
                     const Tensor& h_prev, const Tensor& e_prev, std::span<const std::uint8_t> mask = {});

/// Sentence-level weights from a separate scorer over sentence states.
Tensor attend_sentence(Tape& tape, const AttentionParams& p, const Tensor& projected_sentence_keys,
                       const Tensor& h_prev, const Tensor& e_prev);

class DegenerateAttentionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P(j) = P_w(j) P_s(s(j)) / Σ_k P_w(k) P_s(s(k)).
Tensor rescale_hierarchical(Tape& tape, const Tensor& word_weights, const Tensor& sentence_weights,
                            std::span<const int> sent_of_word);

/// Running sum of past unnormalized attention for one decoded sequence.
struct AttentionTrace {
  Tensor beta;                   // undefined before the first step (treated as all ones)
  std::vector<Tensor> history;   // α'_1 .. α'_{t-1}

  std::size_t steps() const { return history.size(); }
};

/// α_t = normalize(α'_t / β_t), then β_{t+1} = β_t + α'_t. α'_t must be
/// positive at unmasked positions and zero at masked ones.
Tensor temporal_rescale(Tape& tape, const Tensor& alpha_raw, AttentionTrace& trace,
                        std::span<const std::uint8_t> mask = {});

/// exp(scores) with masked positions forced to zero.
Tensor masked_exp(Tape& tape, const Tensor& scores, std::span<const std::uint8_t> mask = {});

/// Context vector Σ_j weights[j] · states[j].
Tensor context_vector(Tape& tape, const Tensor& weights, const Tensor& states);

}  // namespace s2sum
