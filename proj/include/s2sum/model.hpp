// SPDX-License-Identifier: Apache-2.0
//
// The full encoder-decoder summarizer: parameter layout, document encoding,
// one decoder step, and the teacher-forced sequence loss.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "s2sum/attention.hpp"
#include "s2sum/decoder.hpp"
#include "s2sum/encoder.hpp"
#include "s2sum/example.hpp"
#include "s2sum/model_config.hpp"
#include "s2sum/params.hpp"

namespace s2sum {

struct EncodedDocument {
  const Example* example = nullptr;
  EncoderStates states;
  std::vector<std::uint8_t> mask;  // 1 at real positions
  Tensor keys;                     // projected word keys, main attention
  Tensor pointer_keys;             // projected word keys, separate pointer scorer
  Tensor sentence_keys;            // projected sentence keys, hierarchical only
  Tensor initial_state;            // h_0
  std::size_t length() const { return states.length; }
};

struct DecoderState {
  Tensor hidden;                  // h_{i-1}
  Tensor prev_embedding;          // E[o_{i-1}], or the source embedding after a copy
  std::optional<AttentionTrace> trace;  // temporal mode only
};

class Summarizer {
 public:
  /// Registers every parameter and initializes them from `seed`.
  Summarizer(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Encodes one example, padded with PAD rows to `padded_length` (0 = no
  /// padding). Padding never changes the states at real positions.
  EncodedDocument encode(Tape& tape, const Example& example, std::size_t padded_length = 0) const;

  /// State before the first summary token: h_0 and the BOS embedding.
  DecoderState start(Tape& tape, const EncodedDocument& doc) const;

  /// One decoder step from `state`; attention uses h_{i-1} and E[o_{i-1}].
  /// Updates the temporal trace inside `state` when present.
  DecoderStep step(Tape& tape, const EncodedDocument& doc, DecoderState& state,
                   std::shared_ptr<const std::vector<int>> lvt, bool mask_eos = false) const;

  /// Next-step state after a generated decoder id or a copy of source
  /// position `copy_position`.
  DecoderState advance(Tape& tape, const EncodedDocument& doc, const DecoderStep& step, DecoderState state,
                       int token_id, int copy_position) const;

  /// Summed step losses over the reference summary with teacher forcing.
  /// Targets outside `lvt` are scored as UNK. Returns the scalar loss and
  /// sets `*target_count` to the number of scored steps.
  Tensor sequence_loss(Tape& tape, const Example& example, std::shared_ptr<const std::vector<int>> lvt,
                       std::size_t padded_length = 0, std::size_t* target_count = nullptr) const;

  /// Optional L2 penalty on the switch parameters, added by sequence_loss.
  void set_switch_l2(double coefficient) { switch_l2_ = coefficient; }

  /// Every vocabulary id, for full-softmax decoding.
  std::shared_ptr<const std::vector<int>> full_vocabulary() const { return full_vocab_; }

 private:
  ModelConfig config_;
  ParamStore params_;
  EmbeddingBank bank_;
  GruCell enc_fwd_, enc_bwd_;
  std::optional<SentenceEncoder> sentences_;
  AttentionParams attention_;
  std::optional<AttentionParams> sentence_attention_;
  std::optional<AttentionParams> pointer_attention_;
  Tensor dec_embedding_;
  GruCell dec_cell_;
  Tensor bridge_w_, bridge_b_;
  OutputLayer output_;
  std::optional<SwitchParams> switch_;
  double switch_l2_ = 0.0;
  std::shared_ptr<const std::vector<int>> full_vocab_;
};

}  // namespace s2sum
