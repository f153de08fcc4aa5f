// SPDX-License-Identifier: Apache-2.0

#include "s2sum/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace s2sum {

SwitchParams SwitchParams::create(ParamStore& params, const std::string& prefix, std::size_t hidden,
                                  std::size_t embedding, std::size_t context, std::size_t dim) {
  SwitchParams p;
  p.w_h = params.add(prefix + ".w_h", {dim, hidden});
  p.w_e = params.add(prefix + ".w_e", {dim, embedding});
  p.w_c = params.add(prefix + ".w_c", {dim, context});
  p.b = params.add(prefix + ".b", {dim}, Init::kZero);
  p.v = params.add(prefix + ".v", {dim});
  return p;
}

Tensor switch_probability(Tape& tape, const Tensor& h, const Tensor& e_prev, const Tensor& c, const SwitchParams& p) {
  using namespace ops;
  const Tensor inner =
      add(tape, add(tape, add(tape, matvec(tape, p.w_h, h), matvec(tape, p.w_e, e_prev)), matvec(tape, p.w_c, c)), p.b);
  return sigmoid(tape, dot(tape, p.v, inner));
}

OutputLayer OutputLayer::create(ParamStore& params, const std::string& prefix, std::size_t vocab, std::size_t input) {
  OutputLayer o;
  o.w = params.add(prefix + ".w", {vocab, input});
  o.b = params.add(prefix + ".b", {vocab}, Init::kZero);
  return o;
}

Tensor generator_distribution(Tape& tape, const OutputLayer& out, const Tensor& features, std::span<const int> rows,
                              bool mask_eos) {
  if (rows.empty()) throw ContractError("generator_distribution: empty vocabulary subset");
  const Tensor logits = ops::add(tape, ops::matvec_rows(tape, out.w, features, rows), ops::gather(tape, out.b, rows));
  if (!mask_eos) return ops::softmax(tape, logits);
  std::vector<std::uint8_t> keep(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] == Vocabulary::kEos) keep[i] = 0;
  }
  return ops::softmax(tape, logits, keep);
}

int DecoderStep::lvt_index(int token) const {
  const auto it = std::lower_bound(lvt->begin(), lvt->end(), token);
  if (it == lvt->end() || *it != token) return -1;
  return static_cast<int>(it - lvt->begin());
}

double DecoderStep::gen_probability(int token) const {
  const int i = lvt_index(token);
  return i < 0 ? 0.0 : gen_dist.at(static_cast<std::size_t>(i));
}

Tensor step_loss(Tape& tape, const DecoderStep& step, int target_id, bool generate, int pointer_target) {
  using namespace ops;
  auto log_of = [&](const Tensor& t) { return log_floor(tape, t, kLogFloor); };
  if (generate || !step.has_switch()) {
    if (!generate) throw ContractError("step_loss: pointer target without a pointer head");
    const int i = step.lvt_index(target_id);
    if (i < 0) {
      throw ContractError("step_loss: target id " + std::to_string(target_id) +
                          " outside the batch vocabulary (map it to UNK first)");
    }
    Tensor ll = log_of(pick(tape, step.gen_dist, static_cast<std::size_t>(i)));
    if (step.has_switch()) ll = add(tape, ll, log_of(step.switch_prob));
    return scale(tape, ll, -1.0);
  }
  if (pointer_target < 0 || static_cast<std::size_t>(pointer_target) >= step.ptr_dist.size()) {
    throw ContractError("step_loss: pointer target " + std::to_string(pointer_target) + " outside " +
                        std::to_string(step.ptr_dist.size()) + " source positions");
  }
  const Tensor ll = add(tape, log_of(pick(tape, step.ptr_dist, static_cast<std::size_t>(pointer_target))),
                        log_of(one_minus(tape, step.switch_prob)));
  return scale(tape, ll, -1.0);
}

Emission emit(const DecoderStep& step, std::span<const std::string> doc_surface, const Vocabulary& decoder_vocab) {
  const auto gen = step.gen_dist.values();
  const std::size_t g_best = static_cast<std::size_t>(std::max_element(gen.begin(), gen.end()) - gen.begin());
  const double s = step.has_switch() ? step.switch_prob.item() : 1.0;
  const double gen_score = s * gen[g_best];

  Emission e;
  if (step.has_switch()) {
    const auto ptr = step.ptr_dist.values();
    const std::size_t p_best = static_cast<std::size_t>(std::max_element(ptr.begin(), ptr.end()) - ptr.begin());
    const double ptr_score = (1.0 - s) * ptr[p_best];
    if (ptr_score > gen_score) {
      e.pointed = true;
      e.copy_position = static_cast<int>(p_best);
      e.surface = doc_surface[p_best];
      e.log_prob = std::log(std::max(ptr_score, kLogFloor));
      return e;
    }
  }
  e.token_id = (*step.lvt)[g_best];
  e.surface = decoder_vocab.token(e.token_id);
  e.log_prob = std::log(std::max(gen_score, kLogFloor));
  return e;
}

}  // namespace s2sum
