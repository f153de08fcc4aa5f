// SPDX-License-Identifier: Apache-2.0
//
// Decoder pieces: the LVT-restricted generator softmax, the generator/pointer
// switch, the per-step training loss and the decode-time emission rule.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "s2sum/encoder.hpp"
#include "s2sum/params.hpp"
#include "s2sum/tensor.hpp"
#include "s2sum/text.hpp"

namespace s2sum {

/// P(s=1) = σ(v · (W_h h_i + W_e e_prev + W_c c_i + b))
struct SwitchParams {
  Tensor w_h;  // [S x H]
  Tensor w_e;  // [S x d_w]
  Tensor w_c;  // [S x 2H]
  Tensor b;    // [S]
  Tensor v;    // [S]

  static SwitchParams create(ParamStore& params, const std::string& prefix, std::size_t hidden,
                             std::size_t embedding, std::size_t context, std::size_t dim);
};

Tensor switch_probability(Tape& tape, const Tensor& h, const Tensor& e_prev, const Tensor& c, const SwitchParams& p);

/// Generator output layer over [h_i | c_i].
struct OutputLayer {
  Tensor w;  // [V_t x (H + 2H)]
  Tensor b;  // [V_t]

  static OutputLayer create(ParamStore& params, const std::string& prefix, std::size_t vocab, std::size_t input);
};

/// Softmax over the listed vocabulary rows only. Rows not listed are never
/// touched. With `mask_eos`, the EOS row (if listed) gets probability 0.
Tensor generator_distribution(Tape& tape, const OutputLayer& out, const Tensor& features, std::span<const int> rows,
                              bool mask_eos = false);

struct DecoderStep {
  Tensor hidden;        // h_i
  Tensor context;       // c_i
  Tensor gen_dist;      // aligned with *lvt
  Tensor switch_prob;   // scalar; undefined without the pointer head
  Tensor ptr_dist;      // over source positions
  Tensor attention;     // weights behind c_i
  Tensor alpha_raw;     // exponentiated scores, temporal mode only
  std::shared_ptr<const std::vector<int>> lvt;  // sorted vocabulary ids

  bool has_switch() const { return switch_prob.defined(); }
  /// Position of a vocabulary id within gen_dist, or -1 outside the LVT.
  int lvt_index(int token) const;
  /// Generator probability of a vocabulary id; exactly 0 outside the LVT.
  double gen_probability(int token) const;
};

/// Negative log-likelihood of one target step, logs floored at ln(1e-12):
/// g = 1: -(log gen[target] + log s); g = 0: -(log ptr[p] + log(1 - s)).
/// Without a switch only the generator term is used.
Tensor step_loss(Tape& tape, const DecoderStep& step, int target_id, bool generate, int pointer_target);

constexpr double kLogFloor = 1e-12;

struct Emission {
  bool pointed = false;
  int token_id = Vocabulary::kUnk;  // decoder id for generated tokens
  int copy_position = -1;           // source index for pointed tokens
  std::string surface;
  double log_prob = 0.0;            // log of the winning branch posterior
};

/// Posterior argmax: generate when s·max(gen) ≥ (1 − s)·max(ptr), otherwise
/// copy the surface form at argmax(ptr). Ties go to the lower id/position.
Emission emit(const DecoderStep& step, std::span<const std::string> doc_surface, const Vocabulary& decoder_vocab);

}  // namespace s2sum
