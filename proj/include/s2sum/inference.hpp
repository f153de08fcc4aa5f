// SPDX-License-Identifier: Apache-2.0
//
// Decoding a trained Summarizer: beam search in the EOS-terminated and
// fixed-length regimes, greedy emission, and output records.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "s2sum/beam_search.hpp"
#include "s2sum/model.hpp"

namespace s2sum {

struct DecodeOptions {
  std::size_t beam_size = 5;
  std::size_t max_len = 30;
  bool fixed_length = false;  // suppress EOS and emit exactly max_len tokens
  std::size_t lvt_size = 0;   // 0 = full decoder vocabulary
  bool record_attention = false;
};

struct Decoded {
  std::string id;
  std::vector<std::string> tokens;      // without EOS
  std::vector<int> token_ids;           // decoder ids; -1 for copies
  std::vector<int> copy_positions;      // source index of every copied token
  double avg_logprob = 0.0;
  bool finished = false;
  std::vector<std::vector<double>> attention;  // step x position, when recorded

  std::string summary() const;
  nlohmann::ordered_json to_json() const;
};

/// Step-model adapter over a Summarizer and one encoded document.
class SummarizerSearch {
 public:
  SummarizerSearch(const Summarizer& model, const Example& example, std::shared_ptr<const std::vector<int>> lvt);

  using State = DecoderState;
  struct Expansion {
    DecoderStep step;
    DecoderState state;  // after the step (temporal trace updated)
  };

  State initial() const;
  Expansion expand(const State& state, bool mask_eos) const;
  void candidates(const Expansion& e, std::vector<BeamCandidate>& out) const;
  State advance(const Expansion& e, const BeamCandidate& c) const;

  const EncodedDocument& document() const { return doc_; }

 private:
  const Summarizer& model_;
  mutable Tape tape_{false};
  EncodedDocument doc_;
  std::shared_ptr<const std::vector<int>> lvt_;
};

/// Decoder rows used for one example: the full vocabulary, or the LVT
/// subset for that example alone when lvt_size > 0.
std::shared_ptr<const std::vector<int>> decode_vocabulary(const Summarizer& model, const Example& example,
                                                          const Vocabulary& decoder_vocab, std::size_t lvt_size);

Decoded beam_decode(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                    const DecodeOptions& options);

/// Exactly n_words tokens with EOS suppressed.
Decoded decode_fixed_length(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                            std::size_t beam_size, std::size_t n_words);

/// Repeated emit() until EOS or max_len.
Decoded greedy_decode(const Summarizer& model, const Example& example, const Vocabulary& decoder_vocab,
                      std::size_t max_len, std::size_t lvt_size = 0);

/// 100 * fraction of summary tokens that occur anywhere in the source.
/// Throws std::invalid_argument for an empty summary.
double src_copy_rate(std::span<const std::string> summary, std::span<const std::string> source);

}  // namespace s2sum
