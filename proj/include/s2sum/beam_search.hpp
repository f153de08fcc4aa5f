// SPDX-License-Identifier: Apache-2.0
//
// Beam search over any step model exposing
//
//   State initial() const;
//   Expansion expand(const State&, bool mask_eos) const;
//   void candidates(const Expansion&, std::vector<BeamCandidate>&) const;
//   State advance(const Expansion&, const BeamCandidate&) const;
//
// Candidates carry the log of their branch posterior (switch * gen for
// generated tokens, (1 - switch) * ptr for copies).

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace s2sum {

struct BeamCandidate {
  bool pointed = false;
  int token = -1;     // vocabulary id for generated tokens
  int position = -1;  // source index for copies
  bool eos = false;
  double log_prob = 0.0;
};

struct BeamResult {
  std::vector<BeamCandidate> tokens;  // includes the final EOS when finished
  double log_prob = 0.0;
  bool finished = false;

  /// Average per-token log-probability, the ranking score.
  double average() const { return tokens.empty() ? 0.0 : log_prob / static_cast<double>(tokens.size()); }
};

namespace detail {

struct Ranked {
  double score;
  BeamCandidate cand;
  std::size_t parent;
};

// Higher score first; ties prefer generation, then lower id / position, then
// the earlier parent.
inline bool ranks_before(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.cand.pointed != b.cand.pointed) return !a.cand.pointed;
  if (a.cand.token != b.cand.token) return a.cand.token < b.cand.token;
  if (a.cand.position != b.cand.position) return a.cand.position < b.cand.position;
  return a.parent < b.parent;
}

inline bool better_result(const BeamResult& a, const BeamResult& b) { return a.average() > b.average(); }

}  // namespace detail

/// Keeps the beam_size best partial hypotheses per step. Hypotheses ending
/// in EOS are set aside; the search stops when none are live or after
/// max_len steps. Returns the finished hypothesis with the best average
/// log-probability, or the best unfinished one when nothing finished.
template <class Model>
BeamResult beam_search(const Model& model, std::size_t beam_size, std::size_t max_len, bool mask_eos = false) {
  using State = typename Model::State;
  using Expansion = typename Model::Expansion;
  struct Hyp {
    State state;
    BeamResult result;
  };
  if (beam_size < 1) beam_size = 1;

  std::vector<Hyp> live;
  live.push_back(Hyp{model.initial(), BeamResult{}});
  std::vector<BeamResult> finished;
  std::vector<BeamCandidate> cands;

  for (std::size_t t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Expansion> expansions;
    expansions.reserve(live.size());
    std::vector<detail::Ranked> pool;
    for (std::size_t i = 0; i < live.size(); ++i) {
      expansions.push_back(model.expand(live[i].state, mask_eos));
      cands.clear();
      model.candidates(expansions.back(), cands);
      std::vector<detail::Ranked> local;
      local.reserve(cands.size());
      for (const BeamCandidate& c : cands) local.push_back({live[i].result.log_prob + c.log_prob, c, i});
      const std::size_t keep = std::min(beam_size, local.size());
      std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep), local.end(),
                        detail::ranks_before);
      pool.insert(pool.end(), local.begin(), local.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(pool.begin(), pool.end(), detail::ranks_before);
    if (pool.size() > beam_size) pool.resize(beam_size);

    std::vector<Hyp> next;
    for (const detail::Ranked& r : pool) {
      BeamResult res = live[r.parent].result;
      res.tokens.push_back(r.cand);
      res.log_prob = r.score;
      if (r.cand.eos) {
        res.finished = true;
        finished.push_back(std::move(res));
      } else {
        next.push_back(Hyp{model.advance(expansions[r.parent], r.cand), std::move(res)});
      }
    }
    live = std::move(next);
  }

  const std::vector<BeamResult>* source = &finished;
  std::vector<BeamResult> unfinished;
  if (finished.empty()) {
    for (Hyp& h : live) unfinished.push_back(std::move(h.result));
    source = &unfinished;
  }
  if (source->empty()) return BeamResult{};
  // First of the best in discovery order keeps ties deterministic.
  const BeamResult* best = &source->front();
  for (const BeamResult& r : *source)
    if (detail::better_result(r, *best)) best = &r;
  return *best;
}

}  // namespace s2sum
