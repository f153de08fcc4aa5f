// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit tests and the acceptance runner: random toy
// examples, finite-difference gradient checks, and a small pure-generator
// model with an exhaustive-search oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "s2sum/beam_search.hpp"
#include "s2sum/model.hpp"
#include "s2sum/rng.hpp"

namespace s2sum::testing {

// Small integer in [lo, hi].
inline std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// A random well-formed example over a vocabulary of `vocab` words (source and
// decoder share ids). Roughly a third of summary positions are pointer targets.
inline Example random_example(std::uint64_t seed, std::size_t vocab, std::size_t max_doc, std::size_t bins = 10) {
  Rng rng(seed);
  Example ex;
  ex.id = "toy" + std::to_string(seed);
  const std::size_t n = draw(rng, 3, max_doc);
  const std::size_t sentences = std::min<std::size_t>(n, draw(rng, 1, 3));
  // Sentence boundaries: each sentence gets at least one word.
  std::vector<std::size_t> cuts = {0};
  for (std::size_t s = 1; s < sentences; ++s) cuts.push_back(draw(rng, cuts.back() + 1, n - (sentences - s)));
  int sent = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<std::size_t>(sent + 1) < cuts.size() && j == cuts[static_cast<std::size_t>(sent + 1)]) ++sent;
    const int tok = static_cast<int>(draw(rng, Vocabulary::kNumSpecials, vocab - 1));
    ex.doc_tokens.push_back(tok);
    ex.doc_surface.push_back("w" + std::to_string(tok));
    ex.pos_ids.push_back(static_cast<int>(draw(rng, 1, 10)));
    ex.ner_ids.push_back(static_cast<int>(draw(rng, 1, 2)));
    ex.tf_bin.push_back(static_cast<int>(rng.below(bins)));
    ex.idf_bin.push_back(static_cast<int>(rng.below(bins)));
    ex.sent_ids.push_back(sent);
  }
  const std::size_t m = draw(rng, 2, 5);
  ex.summary_tokens.push_back(Vocabulary::kBos);
  ex.switch_targets.push_back(1);
  ex.pointer_targets.push_back(-1);
  for (std::size_t i = 0; i < m; ++i) {
    if (rng.below(3) == 0) {
      const std::size_t p = rng.below(n);
      ex.summary_tokens.push_back(Vocabulary::kUnk);
      ex.switch_targets.push_back(0);
      ex.pointer_targets.push_back(static_cast<int>(p));
      ex.summary_surface.push_back(ex.doc_surface[p]);
    } else {
      const int tok = static_cast<int>(draw(rng, Vocabulary::kNumSpecials, vocab - 1));
      ex.summary_tokens.push_back(tok);
      ex.switch_targets.push_back(1);
      ex.pointer_targets.push_back(-1);
      ex.summary_surface.push_back("w" + std::to_string(tok));
    }
  }
  ex.summary_tokens.push_back(Vocabulary::kEos);
  ex.switch_targets.push_back(1);
  ex.pointer_targets.push_back(-1);
  return ex;
}

struct GradCheckReport {
  double worst_rel = 0.0;
  std::size_t checked = 0;
  std::string worst_name;
};

// Relative error with a floor on the denominator so that gradients that are
// zero both ways count as exact.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central finite differences. `order` 2 uses the two-point stencil, order 4
// the four-point stencil (truncation error O(h^4)).
inline double numeric_derivative(double& x, double h, int order, const std::function<double()>& f) {
  const double old = x;
  x = old + h;
  const double p1 = f();
  x = old - h;
  const double m1 = f();
  double d = (p1 - m1) / (2.0 * h);
  if (order == 4) {
    x = old + 2.0 * h;
    const double p2 = f();
    x = old - 2.0 * h;
    const double m2 = f();
    d = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
  }
  x = old;
  return d;
}

// Compares `grads` (already populated) against finite differences of `f` for
// `per_tensor` sampled coordinates of every tensor.
inline GradCheckReport check_params(const ParamStore& params, const std::function<double()>& f, Rng& rng,
                                    std::size_t per_tensor, double h, int order) {
  GradCheckReport report;
  for (const auto& entry : params.entries()) {
    Tensor t = entry.tensor;
    auto values = t.mutable_values();
    const std::size_t count = std::min(per_tensor, values.size());
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = count == values.size() ? k : rng.below(values.size());
      const double numeric = numeric_derivative(values[i], h, order, f);
      const double rel = relative_error(t.grad()[i], numeric);
      ++report.checked;
      if (rel > report.worst_rel) {
        report.worst_rel = rel;
        report.worst_name = entry.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

// Gradient check of a whole-sequence loss for one model and one example.
inline GradCheckReport check_sequence_loss(Summarizer& model, const Example& ex, std::uint64_t seed,
                                           std::size_t per_tensor) {
  const auto lvt = model.full_vocabulary();
  model.params().zero_grad();
  {
    Tape tape;
    Tensor loss = model.sequence_loss(tape, ex, lvt);
    tape.backward(loss);
  }
  const auto f = [&] {
    Tape tape(false);
    return model.sequence_loss(tape, ex, lvt).item();
  };
  Rng rng(seed);
  return check_params(model.params(), f, rng, per_tensor, 1e-3, 4);
}

// ---------------------------------------------------------------------------
// Toy next-token model: h_{t+1} = tanh(U h_t + E[token]), logits = W h_t.

struct ToyModel {
  static constexpr std::size_t kHidden = 6;

  int vocab = 4;
  int eos = 3;  // the last id
  std::vector<double> w, u, e, h0;

  explicit ToyModel(std::uint64_t seed, int vocab_size = 4) : vocab(vocab_size), eos(vocab_size - 1) {
    std::mt19937_64 gen(seed);
    auto fill = [&](std::vector<double>& v, std::size_t n, double sd) {
      std::normal_distribution<double> dist(0.0, sd);
      v.resize(n);
      for (auto& x : v) x = dist(gen);
    };
    fill(w, static_cast<std::size_t>(vocab) * kHidden, 1.5);
    fill(u, kHidden * kHidden, 1.0);
    fill(e, static_cast<std::size_t>(vocab) * kHidden, 1.0);
    fill(h0, kHidden, 1.0);
  }

  std::vector<double> log_probs(const std::vector<double>& h, bool mask_eos) const {
    std::vector<double> z(static_cast<std::size_t>(vocab));
    for (int k = 0; k < vocab; ++k) {
      z[k] = 0.0;
      for (std::size_t j = 0; j < kHidden; ++j) z[k] += w[k * kHidden + j] * h[j];
    }
    double mx = -INFINITY;
    for (int k = 0; k < vocab; ++k)
      if (!(mask_eos && k == eos)) mx = std::max(mx, z[k]);
    double total = 0.0;
    for (int k = 0; k < vocab; ++k)
      if (!(mask_eos && k == eos)) total += std::exp(z[k] - mx);
    std::vector<double> out(static_cast<std::size_t>(vocab));
    for (int k = 0; k < vocab; ++k) out[k] = (mask_eos && k == eos) ? -INFINITY : z[k] - mx - std::log(total);
    return out;
  }

  std::vector<double> next(const std::vector<double>& h, int token) const {
    std::vector<double> out(kHidden);
    for (std::size_t i = 0; i < kHidden; ++i) {
      double a = e[token * kHidden + i];
      for (std::size_t j = 0; j < kHidden; ++j) a += u[i * kHidden + j] * h[j];
      out[i] = std::tanh(a);
    }
    return out;
  }

  // Search adapter.
  using State = std::vector<double>;
  struct Expansion {
    State h;
    std::vector<double> lp;
  };
  State initial() const { return h0; }
  Expansion expand(const State& h, bool mask_eos) const { return {h, log_probs(h, mask_eos)}; }
  void candidates(const Expansion& x, std::vector<BeamCandidate>& out) const {
    for (int k = 0; k < vocab; ++k) {
      if (std::isinf(x.lp[k])) continue;
      BeamCandidate c;
      c.token = k;
      c.eos = k == eos;
      c.log_prob = x.lp[k];
      out.push_back(c);
    }
  }
  State advance(const Expansion& x, const BeamCandidate& c) const { return next(x.h, c.token); }

  double sequence_log_prob(const std::vector<int>& seq) const {
    State h = h0;
    double total = 0.0;
    for (int t : seq) {
      total += log_probs(h, false)[t];
      h = next(h, t);
    }
    return total;
  }
};

// Ranking key used by beam selection: finished before unfinished, then
// average log-probability.
struct SearchKey {
  bool finished = false;
  double average = -INFINITY;
  bool operator<(const SearchKey& o) const {
    if (finished != o.finished) return !finished;
    return average < o.average;
  }
};

// Brute force over every sequence of length <= max_len that contains EOS at
// most as its last token. Sequences that stop short without EOS are not
// complete outputs and are skipped.
inline std::vector<int> exhaustive_best(const ToyModel& m, std::size_t max_len) {
  std::vector<int> best;
  SearchKey best_key;
  bool have = false;
  std::vector<int> seq;
  std::function<void()> walk = [&] {
    if (!seq.empty()) {
      const bool finished = seq.back() == m.eos;
      if (finished || seq.size() == max_len) {
        const SearchKey key{finished, m.sequence_log_prob(seq) / static_cast<double>(seq.size())};
        if (!have || best_key < key) {
          best = seq;
          best_key = key;
          have = true;
        }
      }
      if (finished || seq.size() == max_len) return;
    }
    for (int k = 0; k < m.vocab; ++k) {
      seq.push_back(k);
      walk();
      seq.pop_back();
    }
  };
  walk();
  return best;
}

inline std::vector<int> tokens_of(const BeamResult& r) {
  std::vector<int> out;
  for (const auto& c : r.tokens) out.push_back(c.token);
  return out;
}

inline SearchKey key_of(const BeamResult& r) { return {r.finished, r.average()}; }

}  // namespace s2sum::testing
