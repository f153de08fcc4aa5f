// SPDX-License-Identifier: Apache-2.0

#include "s2sum/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace s2sum {

std::string Decoded::summary() const {
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

nlohmann::ordered_json Decoded::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["summary"] = summary();
  j["copy_positions"] = copy_positions;
  j["avg_logprob"] = avg_logprob;
  if (!attention.empty()) j["attention"] = attention;
  return j;
}

SummarizerSearch::SummarizerSearch(const Summarizer& model, const Example& example,
                                   std::shared_ptr<const std::vector<int>> lvt)
    : model_(model), lvt_(std::move(lvt)) {
  doc_ = model_.encode(tape_, example);
}

SummarizerSearch::State SummarizerSearch::initial() const { return model_.start(tape_, doc_); }

SummarizerSearch::Expansion SummarizerSearch::expand(const State& state, bool mask_eos) const {
  Expansion e;
  e.state = state;
  e.step = model_.step(tape_, doc_, e.state, lvt_, mask_eos);
  return e;
}

void SummarizerSearch::candidates(const Expansion& e, std::vector<BeamCandidate>& out) const {
  const DecoderStep& st = e.step;
  const double s = st.has_switch() ? st.switch_prob.item() : 1.0;
  const auto gen = st.gen_dist.values();
  for (std::size_t k = 0; k < gen.size(); ++k) {
    const double p = s * gen[k];
    if (!(p > 0.0)) continue;
    BeamCandidate c;
    c.token = (*st.lvt)[k];
    c.eos = c.token == Vocabulary::kEos;
    c.log_prob = std::log(p);
    out.push_back(c);
  }
  if (!st.has_switch()) return;
  const auto ptr = st.ptr_dist.values();
  for (std::size_t j = 0; j < ptr.size(); ++j) {
    const double p = (1.0 - s) * ptr[j];
    if (!(p > 0.0)) continue;
    BeamCandidate c;
    c.pointed = true;
    c.position = static_cast<int>(j);
    c.log_prob = std::log(p);
    out.push_back(c);
  }
}

SummarizerSearch::State SummarizerSearch::advance(const Expansion& e, const BeamCandidate& c) const {
  return model_.advance(tape_, doc_, e.step, e.state, c.token, c.pointed ? c.position : -1);
}

std::shared_ptr<const std::vector<int>> decode_vocabulary(const Summarizer& model, const Example& example,
                                                          const Vocabulary& decoder_vocab, std::size_t lvt_size) {
  if (lvt_size == 0) return model.full_vocabulary();
  return std::make_shared<const std::vector<int>>(lvt_batch_vocab({&example}, decoder_vocab, lvt_size));
}

namespace {

Decoded from_result(const BeamResult& r, const Example& example, const Vocabulary& decoder_vocab) {
  Decoded d;
  d.id = example.id;
  d.finished = r.finished;
  d.avg_logprob = r.average();
  for (const BeamCandidate& c : r.tokens) {
    if (c.eos) break;
    if (c.pointed) {
      d.tokens.push_back(example.doc_surface.at(static_cast<std::size_t>(c.position)));
      d.token_ids.push_back(-1);
      d.copy_positions.push_back(c.position);
    } else {
      d.tokens.push_back(decoder_vocab.token(c.token));
      d.token_ids.push_back(c.token);
    }
  }
  return d;
}

// Replays a finished token sequence to collect the attention used at each step.
std::vector<std::vector<double>> replay_attention(const SummarizerSearch& search, const BeamResult& r, bool mask_eos) {
  std::vector<std::vector<double>> rows;
  auto state = search.initial();
  for (const BeamCandidate& c : r.tokens) {
    const auto e = search.expand(state, mask_eos);
    const auto w = e.step.attention.values();
    rows.emplace_back(w.begin(), w.end());
    state = search.advance(e, c);
  }
  return rows;
}

}  // namespace

Decoded beam_decode(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                    const DecodeOptions& options) {
  if (options.max_len < 1) throw std::invalid_argument("beam_decode: max_len must be at least 1");
  const SummarizerSearch search(model, example, decode_vocabulary(model, example, decoder_vocab, options.lvt_size));
  const BeamResult r = beam_search(search, options.beam_size, options.max_len, options.fixed_length);
  Decoded d = from_result(r, example, decoder_vocab);
  if (options.record_attention) d.attention = replay_attention(search, r, options.fixed_length);
  return d;
}

Decoded decode_fixed_length(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                            std::size_t beam_size, std::size_t n_words) {
  if (n_words < 1) throw std::invalid_argument("decode_fixed_length: n_words must be at least 1");
  DecodeOptions o;
  o.beam_size = beam_size;
  o.max_len = n_words;
  o.fixed_length = true;
  return beam_decode(model, example, decoder_vocab, o);
}

Decoded greedy_decode(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                      std::size_t max_len, std::size_t lvt_size) {
  Tape tape(false);
  const auto lvt = decode_vocabulary(model, example, decoder_vocab, lvt_size);
  const EncodedDocument doc = model.encode(tape, example);
  DecoderState state = model.start(tape, doc);
  Decoded d;
  d.id = example.id;
  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t t = 0; t < max_len; ++t) {
    const DecoderStep st = model.step(tape, doc, state, lvt);
    const Emission e = emit(st, example.doc_surface, decoder_vocab);
    total += e.log_prob;
    ++steps;
    if (!e.pointed && e.token_id == Vocabulary::kEos) {
      d.finished = true;
      break;
    }
    d.tokens.push_back(e.surface);
    d.token_ids.push_back(e.pointed ? -1 : e.token_id);
    if (e.pointed) d.copy_positions.push_back(e.copy_position);
    state = model.advance(tape, doc, st, std::move(state), e.token_id, e.pointed ? e.copy_position : -1);
  }
  d.avg_logprob = steps ? total / static_cast<double>(steps) : 0.0;
  return d;
}

double src_copy_rate(std::span<const std::string> summary, std::span<const std::string> source) {
  if (summary.empty()) throw std::invalid_argument("src_copy_rate: empty summary has no copy rate");
  const std::unordered_set<std::string> vocab(source.begin(), source.end());
  std::size_t hits = 0;
  for (const std::string& t : summary) hits += vocab.count(t);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(summary.size());
}

}  // namespace s2sum
