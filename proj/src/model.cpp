// SPDX-License-Identifier: Apache-2.0

#include "s2sum/model.hpp"

#include <numeric>

namespace s2sum {

Summarizer::Summarizer(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t H = config_.hidden, D = config_.word_dim, C = config_.context_dim(), A = config_.attn_dim();
  bank_ = EmbeddingBank::create(params_, config_);
  const std::size_t in = config_.encoder_input_dim();
  enc_fwd_ = GruCell::create(params_, "enc.fwd", in, H);
  enc_bwd_ = GruCell::create(params_, "enc.bwd", in, H);
  if (config_.hierarchical) sentences_ = SentenceEncoder::create(params_, config_);

  attention_ = AttentionParams::create(params_, "attn", H, D, C, A);
  if (config_.hierarchical) {
    sentence_attention_ =
        AttentionParams::create(params_, "attn.sent", H, D, C + config_.sentence_position_dim, A);
  }
  if (config_.separate_pointer_attention) pointer_attention_ = AttentionParams::create(params_, "attn.ptr", H, D, C, A);

  dec_embedding_ = params_.add("dec.emb", {config_.target_vocab, D});
  dec_cell_ = GruCell::create(params_, "dec.gru", D + C, H);
  bridge_w_ = params_.add("dec.bridge.w", {H, H});
  bridge_b_ = params_.add("dec.bridge.b", {H}, Init::kZero);
  output_ = OutputLayer::create(params_, "dec.out", config_.target_vocab, H + C);
  if (config_.pointer) switch_ = SwitchParams::create(params_, "dec.switch", H, D, C, A);

  params_.initialize(seed, config_.init_scale);

  auto all = std::make_shared<std::vector<int>>(config_.target_vocab);
  std::iota(all->begin(), all->end(), 0);
  full_vocab_ = std::move(all);
}

EncodedDocument Summarizer::encode(Tape& tape, const Example& example, std::size_t padded_length) const {
  const std::size_t length = example.doc_length();
  const std::size_t n = std::max(length, padded_length);
  EncodedDocument doc;
  doc.example = &example;

  std::vector<Tensor> inputs = embed(tape, example, bank_, config_.features);
  const Tensor pad_input = Tensor::zeros({config_.encoder_input_dim()});
  inputs.resize(n, pad_input);

  if (config_.hierarchical) {
    std::vector<int> sent_ids = example.sent_ids;
    sent_ids.resize(n, sent_ids.empty() ? 0 : sent_ids.back());
    doc.states = encode_hierarchical(tape, enc_fwd_, enc_bwd_, *sentences_, inputs, sent_ids, length);
    doc.sentence_keys = project_keys(tape, *sentence_attention_, doc.states.sent_states);
  } else {
    doc.states = encode_flat(tape, enc_fwd_, enc_bwd_, inputs, length);
  }
  doc.mask.assign(n, 0);
  std::fill(doc.mask.begin(), doc.mask.begin() + static_cast<std::ptrdiff_t>(length), 1);

  doc.keys = project_keys(tape, attention_, doc.states.word_states);
  if (pointer_attention_) doc.pointer_keys = project_keys(tape, *pointer_attention_, doc.states.word_states);

  // The backward state at position 0 has read the whole document.
  doc.initial_state =
      ops::tanh(tape, ops::add(tape, ops::matvec(tape, bridge_w_, doc.states.backward[0]), bridge_b_));
  return doc;
}

DecoderState Summarizer::start(Tape& tape, const EncodedDocument& doc) const {
  DecoderState s;
  s.hidden = doc.initial_state;
  s.prev_embedding = ops::row(tape, dec_embedding_, Vocabulary::kBos);
  if (config_.temporal) s.trace.emplace();
  return s;
}

DecoderStep Summarizer::step(Tape& tape, const EncodedDocument& doc, DecoderState& state,
                             std::shared_ptr<const std::vector<int>> lvt, bool mask_eos) const {
  using namespace ops;
  DecoderStep out;
  const Tensor scores = attention_scores(tape, attention_, doc.keys, state.hidden, state.prev_embedding);
  Tensor weights;
  if (config_.temporal) {
    out.alpha_raw = masked_exp(tape, scores, doc.mask);
    weights = temporal_rescale(tape, out.alpha_raw, *state.trace, doc.mask);
  } else if (config_.hierarchical) {
    const Tensor word = softmax(tape, scores, doc.mask);
    const Tensor sent = attend_sentence(tape, *sentence_attention_, doc.sentence_keys, state.hidden, state.prev_embedding);
    weights = rescale_hierarchical(tape, word, sent, doc.states.sent_of_word);
  } else {
    weights = softmax(tape, scores, doc.mask);
  }
  out.attention = weights;
  out.context = context_vector(tape, weights, doc.states.word_states);

  const Tensor gru_in[] = {state.prev_embedding, out.context};
  out.hidden = gru_step(tape, dec_cell_, concat(tape, gru_in), state.hidden);

  const Tensor features[] = {out.hidden, out.context};
  out.gen_dist = generator_distribution(tape, output_, concat(tape, features), *lvt, mask_eos);
  out.lvt = std::move(lvt);

  if (switch_) {
    out.switch_prob = switch_probability(tape, out.hidden, state.prev_embedding, out.context, *switch_);
    if (pointer_attention_) {
      out.ptr_dist = softmax(tape,
                             attention_scores(tape, *pointer_attention_, doc.pointer_keys, state.hidden,
                                              state.prev_embedding),
                             doc.mask);
    } else {
      out.ptr_dist = weights;
    }
  } else {
    out.ptr_dist = weights;
  }
  return out;
}

DecoderState Summarizer::advance(Tape& tape, const EncodedDocument& doc, const DecoderStep& step, DecoderState state,
                                 int token_id, int copy_position) const {
  state.hidden = step.hidden;
  if (copy_position >= 0) {
    const int source_id = doc.example->doc_tokens.at(static_cast<std::size_t>(copy_position));
    state.prev_embedding = ops::row(tape, bank_.word, static_cast<std::size_t>(source_id));
  } else {
    state.prev_embedding = ops::row(tape, dec_embedding_, static_cast<std::size_t>(token_id));
  }
  return state;
}

Tensor Summarizer::sequence_loss(Tape& tape, const Example& example, std::shared_ptr<const std::vector<int>> lvt,
                                 std::size_t padded_length, std::size_t* target_count) const {
  const EncodedDocument doc = encode(tape, example, padded_length);
  DecoderState state = start(tape, doc);
  std::vector<Tensor> losses;
  for (std::size_t i = 1; i < example.summary_tokens.size(); ++i) {
    const DecoderStep st = step(tape, doc, state, lvt);
    const bool point = switch_ && example.switch_targets[i] == 0;
    int target = example.summary_tokens[i];
    if (!point && st.lvt_index(target) < 0) target = Vocabulary::kUnk;
    losses.push_back(step_loss(tape, st, target, !point, point ? example.pointer_targets[i] : -1));
    state = advance(tape, doc, st, std::move(state), example.summary_tokens[i],
                    point ? example.pointer_targets[i] : -1);
  }
  if (target_count) *target_count = losses.size();
  if (losses.empty()) return Tensor::scalar(0.0);
  Tensor total = losses[0];
  for (std::size_t i = 1; i < losses.size(); ++i) total = ops::add(tape, total, losses[i]);
  if (switch_ && switch_l2_ > 0.0) {
    const Tensor* parts[] = {&switch_->w_h, &switch_->w_e, &switch_->w_c, &switch_->b, &switch_->v};
    for (const Tensor* p : parts) {
      total = ops::add(tape, total, ops::scale(tape, ops::sum(tape, ops::mul(tape, *p, *p)), switch_l2_));
    }
  }
  return total;
}

}  // namespace s2sum
