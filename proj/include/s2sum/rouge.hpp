// SPDX-License-Identifier: Apache-2.0
//
// ROUGE-1/2/L: full-length F1, limited-length recall at a byte budget,
// per-highlight multi-sentence scoring, and paired bootstrap significance.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace s2sum {

struct RougeComponent {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static RougeComponent from_counts(double overlap, double system_total, double reference_total);
};

struct RougeScore {
  RougeComponent rouge1;
  RougeComponent rouge2;
  RougeComponent rougeL;
};

using Tokens = std::vector<std::string>;

/// Lowercases, turns ASCII punctuation into spaces, splits on whitespace.
/// No stemming.
Tokens rouge_tokenize(std::string_view text);

/// Clipped n-gram overlap, n in {1, 2}.
RougeComponent rouge_n(std::span<const std::string> system, std::span<const std::string> reference, int n);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
RougeComponent rouge_l(std::span<const std::string> system, std::span<const std::string> reference);

RougeScore rouge_all(std::span<const std::string> system, std::span<const std::string> reference);

/// Longest prefix of at most `byte_budget` bytes that ends on a UTF-8
/// boundary, minus any token the cut would split.
std::string truncate_to_budget(std::string_view text, std::size_t byte_budget);

/// Scores of the truncated system text; the reported measure is recall.
RougeScore rouge_limited_recall(std::string_view system_text, std::span<const std::string> reference,
                                std::size_t byte_budget);

/// Each highlight is a separate unit: n-grams never cross highlight
/// boundaries, and ROUGE-L takes the union LCS of every reference sentence
/// against all system sentences.
RougeScore rouge_multisent(std::span<const Tokens> system, std::span<const Tokens> reference);

struct BootstrapResult {
  double p_value = 0.0;    // share of resamples with mean(a) < mean(b), ties counted half
  double mean_diff = 0.0;  // mean(a - b) on the full sample
  double low = 0.0;        // 2.5th percentile of resampled mean(a - b)
  double high = 0.0;       // 97.5th percentile
};

/// Paired bootstrap over example indices.
BootstrapResult bootstrap_significance(std::span<const double> a, std::span<const double> b, std::size_t iterations,
                                       std::uint64_t seed);

enum class EvalMode { kF1, kLimitedRecall, kMultiSentence };
EvalMode parse_eval_mode(std::string_view name);

struct EvalItem {
  std::string system;            // raw system text
  std::vector<std::string> reference;  // one entry per highlight (or a single text)
  std::string source;            // optional, for the copy rate
};

/// Per-example scores averaged over the corpus, as the report object
/// {"rouge1", "rouge2", "rougeL", "src_copy_rate", "n_examples"}.
nlohmann::ordered_json evaluate_corpus(std::span<const EvalItem> items, EvalMode mode, std::size_t byte_budget);

}  // namespace s2sum
