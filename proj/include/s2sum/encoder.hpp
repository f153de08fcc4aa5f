// SPDX-License-Identifier: Apache-2.0
//
// Document encoders: a flat bidirectional GRU over (optionally
// feature-rich) embeddings, and a two-level word/sentence encoder.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "s2sum/example.hpp"
#include "s2sum/model_config.hpp"
#include "s2sum/params.hpp"
#include "s2sum/tensor.hpp"

namespace s2sum {

struct EmbeddingBank {
  Tensor word;  // [V_src x d_w]
  Tensor pos;   // [T_pos x d_pos], undefined without features
  Tensor ner;
  Tensor tf;
  Tensor idf;

  static EmbeddingBank create(ParamStore& params, const ModelConfig& cfg);
  std::size_t input_width(bool features_on) const;
};

/// z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
/// h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h), h' = (1 − z) ⊙ h + z ⊙ h̃.
struct GruCell {
  Tensor w_z, u_z, b_z;
  Tensor w_r, u_r, b_r;
  Tensor w_h, u_h, b_h;

  static GruCell create(ParamStore& params, const std::string& prefix, std::size_t input, std::size_t hidden);
  std::size_t input_size() const { return w_z.cols(); }
  std::size_t hidden_size() const { return u_z.rows(); }
};

Tensor gru_step(Tape& tape, const GruCell& cell, const Tensor& x, const Tensor& h);

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Per-position encoder inputs, [word | pos | ner | tf | idf] when
/// features_on. Throws LookupError naming the position of any id outside
/// its table.
std::vector<Tensor> embed(Tape& tape, const Example& example, const EmbeddingBank& bank, bool features_on);

struct EncoderStates {
  Tensor word_states;               // [N_d x 2H]
  std::vector<Tensor> forward;      // per position, [H]
  std::vector<Tensor> backward;     // per position, [H]
  Tensor sent_states;               // [N_s x (2H + d_pos_emb)], hierarchical only
  std::vector<int> sent_of_word;    // s(j)
  std::size_t length = 0;           // real (unpadded) positions
};

/// Bidirectional pass, both directions starting from zero. `length` is the
/// number of real positions; trailing padding carries states unchanged so it
/// cannot influence real positions.
EncoderStates encode_flat(Tape& tape, const GruCell& fwd, const GruCell& bwd, std::span<const Tensor> inputs,
                          std::size_t length);

struct SentenceEncoder {
  GruCell fwd;
  GruCell bwd;
  Tensor positions;  // [P x d_pos_emb]

  static SentenceEncoder create(ParamStore& params, const ModelConfig& cfg);
};

/// Word-level pass as in encode_flat, then a sentence-level bidirectional
/// GRU over [last forward state | last backward state] of each sentence, with
/// a learned positional embedding appended to each sentence state. Sentence
/// indices past the positional table reuse its last row.
EncoderStates encode_hierarchical(Tape& tape, const GruCell& fwd, const GruCell& bwd, const SentenceEncoder& sentences,
                                  std::span<const Tensor> inputs, std::span<const int> sent_ids, std::size_t length);

}  // namespace s2sum
