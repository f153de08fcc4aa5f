// SPDX-License-Identifier: Apache-2.0

#include "s2sum/encoder.hpp"

#include <algorithm>
#include <iostream>

namespace s2sum {

EmbeddingBank EmbeddingBank::create(ParamStore& params, const ModelConfig& cfg) {
  EmbeddingBank bank;
  bank.word = params.add("enc.emb.word", {cfg.source_vocab, cfg.word_dim});
  if (cfg.features) {
    bank.pos = params.add("enc.emb.pos", {cfg.pos_tags, cfg.pos_dim});
    bank.ner = params.add("enc.emb.ner", {cfg.ner_tags, cfg.ner_dim});
    bank.tf = params.add("enc.emb.tf", {cfg.feature_bins, cfg.tf_dim});
    bank.idf = params.add("enc.emb.idf", {cfg.feature_bins, cfg.idf_dim});
  }
  return bank;
}

std::size_t EmbeddingBank::input_width(bool features_on) const {
  std::size_t width = word.cols();
  if (features_on) width += pos.cols() + ner.cols() + tf.cols() + idf.cols();
  return width;
}

GruCell GruCell::create(ParamStore& params, const std::string& prefix, std::size_t input, std::size_t hidden) {
  GruCell c;
  c.w_z = params.add(prefix + ".w_z", {hidden, input});
  c.u_z = params.add(prefix + ".u_z", {hidden, hidden});
  c.b_z = params.add(prefix + ".b_z", {hidden}, Init::kZero);
  c.w_r = params.add(prefix + ".w_r", {hidden, input});
  c.u_r = params.add(prefix + ".u_r", {hidden, hidden});
  c.b_r = params.add(prefix + ".b_r", {hidden}, Init::kZero);
  c.w_h = params.add(prefix + ".w_h", {hidden, input});
  c.u_h = params.add(prefix + ".u_h", {hidden, hidden});
  c.b_h = params.add(prefix + ".b_h", {hidden}, Init::kZero);
  return c;
}

Tensor gru_step(Tape& tape, const GruCell& cell, const Tensor& x, const Tensor& h) {
  if (x.rank() != 1 || x.size() != cell.input_size() || h.rank() != 1 || h.size() != cell.hidden_size()) {
    throw ContractError("gru_step: got x" + shape_string(x.shape()) + " h" + shape_string(h.shape()) +
                        " for a cell with input " + std::to_string(cell.input_size()) + " and hidden " +
                        std::to_string(cell.hidden_size()));
  }
  using namespace ops;
  const Tensor z = sigmoid(tape, add(tape, add(tape, matvec(tape, cell.w_z, x), matvec(tape, cell.u_z, h)), cell.b_z));
  const Tensor r = sigmoid(tape, add(tape, add(tape, matvec(tape, cell.w_r, x), matvec(tape, cell.u_r, h)), cell.b_r));
  const Tensor candidate =
      tanh(tape, add(tape, add(tape, matvec(tape, cell.w_h, x), matvec(tape, cell.u_h, mul(tape, r, h))), cell.b_h));
  // (1 - z) * h + z * h̃ == h + z * (h̃ - h)
  return add(tape, h, mul(tape, z, sub(tape, candidate, h)));
}

std::vector<Tensor> embed(Tape& tape, const Example& example, const EmbeddingBank& bank, bool features_on) {
  const std::size_t n = example.doc_tokens.size();
  auto lookup = [&](const Tensor& table, int id, std::size_t pos, const char* what) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw LookupError(std::string("embed: ") + what + " id " + std::to_string(id) + " at position " +
                        std::to_string(pos) + " outside table of " + std::to_string(table.rows()) + " rows");
    }
    return ops::row(tape, table, static_cast<std::size_t>(id));
  };
  std::vector<Tensor> inputs;
  inputs.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Tensor word = lookup(bank.word, example.doc_tokens[j], j, "word");
    if (!features_on) {
      inputs.push_back(std::move(word));
      continue;
    }
    const Tensor parts[] = {word, lookup(bank.pos, example.pos_ids.at(j), j, "pos"),
                            lookup(bank.ner, example.ner_ids.at(j), j, "ner"),
                            lookup(bank.tf, example.tf_bin.at(j), j, "tf"),
                            lookup(bank.idf, example.idf_bin.at(j), j, "idf")};
    inputs.push_back(ops::concat(tape, parts));
  }
  return inputs;
}

EncoderStates encode_flat(Tape& tape, const GruCell& fwd, const GruCell& bwd, std::span<const Tensor> inputs,
                          std::size_t length) {
  if (inputs.empty() || length == 0) throw ContractError("encode_flat: empty document");
  if (length > inputs.size()) throw ContractError("encode_flat: length exceeds input count");
  const std::size_t n = inputs.size();
  EncoderStates out;
  out.length = length;
  out.forward.resize(n);
  out.backward.resize(n);

  Tensor h = Tensor::zeros({fwd.hidden_size()});
  for (std::size_t j = 0; j < n; ++j) {
    if (j < length) h = gru_step(tape, fwd, inputs[j], h);
    out.forward[j] = h;
  }
  h = Tensor::zeros({bwd.hidden_size()});
  for (std::size_t j = n; j-- > 0;) {
    if (j < length) h = gru_step(tape, bwd, inputs[j], h);
    out.backward[j] = h;
  }
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Tensor pair[] = {out.forward[j], out.backward[j]};
    rows.push_back(ops::concat(tape, pair));
  }
  out.word_states = ops::stack_rows(tape, rows);
  out.sent_of_word.assign(n, 0);
  return out;
}

SentenceEncoder SentenceEncoder::create(ParamStore& params, const ModelConfig& cfg) {
  SentenceEncoder s;
  s.fwd = GruCell::create(params, "enc.sent_fwd", 2 * cfg.hidden, cfg.hidden);
  s.bwd = GruCell::create(params, "enc.sent_bwd", 2 * cfg.hidden, cfg.hidden);
  s.positions = params.add("enc.sent_pos", {cfg.sentence_positions, cfg.sentence_position_dim});
  return s;
}

EncoderStates encode_hierarchical(Tape& tape, const GruCell& fwd, const GruCell& bwd, const SentenceEncoder& sentences,
                                  std::span<const Tensor> inputs, std::span<const int> sent_ids, std::size_t length) {
  if (sent_ids.size() != inputs.size()) {
    throw ContractError("encode_hierarchical: " + std::to_string(sent_ids.size()) + " sentence ids for " +
                        std::to_string(inputs.size()) + " positions");
  }
  EncoderStates out = encode_flat(tape, fwd, bwd, inputs, length);

  // Sentence spans over the real positions.
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t j = 0; j < length; ++j) {
    const int s = sent_ids[j];
    if (s < 0 || (j == 0 && s != 0) || (j > 0 && s != sent_ids[j - 1] && s != sent_ids[j - 1] + 1)) {
      throw ContractError("encode_hierarchical: sentence ids must start at 0 and increase by at most 1");
    }
    if (static_cast<std::size_t>(s) == spans.size()) spans.emplace_back(j, j);
    spans.back().second = j;
  }
  const std::size_t n_sent = spans.size();

  std::vector<Tensor> sent_inputs;
  for (const auto& [first, last] : spans) {
    const Tensor pair[] = {out.forward[last], out.backward[first]};
    sent_inputs.push_back(ops::concat(tape, pair));
  }
  std::vector<Tensor> sf(n_sent), sb(n_sent);
  Tensor h = Tensor::zeros({sentences.fwd.hidden_size()});
  for (std::size_t s = 0; s < n_sent; ++s) sf[s] = h = gru_step(tape, sentences.fwd, sent_inputs[s], h);
  h = Tensor::zeros({sentences.bwd.hidden_size()});
  for (std::size_t s = n_sent; s-- > 0;) sb[s] = h = gru_step(tape, sentences.bwd, sent_inputs[s], h);

  const std::size_t table = sentences.positions.rows();
  if (n_sent > table) {
    std::clog << "warning: document has " << n_sent << " sentences; positional embeddings beyond " << table
              << " reuse the last row\n";
  }
  std::vector<Tensor> rows;
  for (std::size_t s = 0; s < n_sent; ++s) {
    const Tensor parts[] = {sf[s], sb[s], ops::row(tape, sentences.positions, std::min(s, table - 1))};
    rows.push_back(ops::concat(tape, parts));
  }
  out.sent_states = ops::stack_rows(tape, rows);

  out.sent_of_word.resize(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    out.sent_of_word[j] = j < length ? sent_ids[j] : static_cast<int>(n_sent - 1);
  }
  return out;
}

}  // namespace s2sum
