// SPDX-License-Identifier: Apache-2.0

#include "s2sum/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

#include "s2sum/inference.hpp"
#include "s2sum/rng.hpp"
#include "s2sum/tensor.hpp"
#include "s2sum/text.hpp"

namespace s2sum {

RougeComponent RougeComponent::from_counts(double overlap, double system_total, double reference_total) {
  RougeComponent c;
  c.precision = system_total > 0 ? overlap / system_total : 0.0;
  c.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  c.f1 = c.precision + c.recall > 0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
  return c;
}

Tokens rouge_tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && (std::isspace(u) || std::ispunct(u))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

void add_ngrams(std::span<const std::string> tokens, int n, NgramCounts& counts, std::size_t& total) {
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() < len) return;
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + len))];
    ++total;
  }
}

std::size_t clipped_overlap(const NgramCounts& sys, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : sys) {
    const auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

void check_order(int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("rouge_n: order must be 1 or 2, got " + std::to_string(n));
}

// Full DP table, (|a|+1) x (|b|+1), row-major.
std::vector<std::size_t> lcs_table(std::span<const std::string> a, std::span<const std::string> b) {
  const std::size_t m = b.size() + 1;
  std::vector<std::size_t> t((a.size() + 1) * m, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i * m + j] = a[i - 1] == b[j - 1] ? t[(i - 1) * m + j - 1] + 1 : std::max(t[(i - 1) * m + j], t[i * m + j - 1]);
    }
  }
  return t;
}

// Indices into `ref` of one LCS with `sys`.
std::vector<std::size_t> lcs_positions(std::span<const std::string> ref, std::span<const std::string> sys) {
  const auto t = lcs_table(ref, sys);
  const std::size_t m = sys.size() + 1;
  std::vector<std::size_t> out;
  std::size_t i = ref.size(), j = sys.size();
  while (i > 0 && j > 0) {
    if (ref[i - 1] == sys[j - 1]) {
      out.push_back(i - 1);
      --i;
      --j;
    } else if (t[(i - 1) * m + j] > t[i * m + j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

RougeComponent rouge_n(std::span<const std::string> system, std::span<const std::string> reference, int n) {
  check_order(n);
  if (reference.size() < static_cast<std::size_t>(n)) {
    std::clog << "warning: reference has fewer than " << n << " tokens; ROUGE-" << n << " is 0\n";
    return {};
  }
  NgramCounts sys, ref;
  std::size_t sys_total = 0, ref_total = 0;
  add_ngrams(system, n, sys, sys_total);
  add_ngrams(reference, n, ref, ref_total);
  return RougeComponent::from_counts(static_cast<double>(clipped_overlap(sys, ref)), static_cast<double>(sys_total),
                                     static_cast<double>(ref_total));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  return lcs_table(a, b).back();
}

RougeComponent rouge_l(std::span<const std::string> system, std::span<const std::string> reference) {
  return RougeComponent::from_counts(static_cast<double>(lcs_length(system, reference)),
                                     static_cast<double>(system.size()), static_cast<double>(reference.size()));
}

RougeScore rouge_all(std::span<const std::string> system, std::span<const std::string> reference) {
  return {rouge_n(system, reference, 1), rouge_n(system, reference, 2), rouge_l(system, reference)};
}

std::string truncate_to_budget(std::string_view text, std::size_t byte_budget) {
  if (text.size() <= byte_budget) return std::string(text);
  std::size_t cut = byte_budget;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  if (cut > 0 && !space(text[cut]) && !space(text[cut - 1])) {
    while (cut > 0 && !space(text[cut - 1])) --cut;
  }
  return std::string(text.substr(0, cut));
}

RougeScore rouge_limited_recall(std::string_view system_text, std::span<const std::string> reference,
                                std::size_t byte_budget) {
  if (byte_budget < 1) throw std::invalid_argument("rouge_limited_recall: byte budget must be at least 1");
  const Tokens sys = rouge_tokenize(truncate_to_budget(system_text, byte_budget));
  return rouge_all(sys, reference);
}

RougeScore rouge_multisent(std::span<const Tokens> system, std::span<const Tokens> reference) {
  if (reference.empty()) {
    std::clog << "warning: empty reference highlight list; ROUGE is 0\n";
    return {};
  }
  RougeScore out;
  for (int n = 1; n <= 2; ++n) {
    NgramCounts sys, ref;
    std::size_t sys_total = 0, ref_total = 0;
    for (const Tokens& s : system) add_ngrams(s, n, sys, sys_total);
    for (const Tokens& r : reference) add_ngrams(r, n, ref, ref_total);
    const RougeComponent c = RougeComponent::from_counts(static_cast<double>(clipped_overlap(sys, ref)),
                                                         static_cast<double>(sys_total), static_cast<double>(ref_total));
    (n == 1 ? out.rouge1 : out.rouge2) = c;
  }

  std::map<std::string, std::size_t> sys_counts, ref_counts;
  std::size_t sys_total = 0, ref_total = 0;
  for (const Tokens& s : system)
    for (const auto& t : s) ++sys_counts[t], ++sys_total;
  for (const Tokens& r : reference)
    for (const auto& t : r) ++ref_counts[t], ++ref_total;
  std::size_t hits = 0;
  for (const Tokens& r : reference) {
    std::set<std::size_t> uni;
    for (const Tokens& s : system) {
      const auto pos = lcs_positions(r, s);
      uni.insert(pos.begin(), pos.end());
    }
    for (std::size_t idx : uni) {
      const std::string& t = r[idx];
      if (sys_counts[t] > 0 && ref_counts[t] > 0) {
        ++hits;
        --sys_counts[t];
        --ref_counts[t];
      }
    }
  }
  out.rougeL = RougeComponent::from_counts(static_cast<double>(hits), static_cast<double>(sys_total),
                                           static_cast<double>(ref_total));
  return out;
}

BootstrapResult bootstrap_significance(std::span<const double> a, std::span<const double> b, std::size_t iterations,
                                       std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw ContractError("bootstrap_significance: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                        " scores");
  }
  if (a.size() < 2) throw ContractError("bootstrap_significance: need at least 2 paired scores");
  if (iterations < 1) throw ContractError("bootstrap_significance: need at least 1 iteration");
  const std::size_t n = a.size();
  BootstrapResult r;
  for (std::size_t i = 0; i < n; ++i) r.mean_diff += a[i] - b[i];
  r.mean_diff /= static_cast<double>(n);

  Rng rng(seed);
  std::vector<double> diffs;
  diffs.reserve(iterations);
  double below = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = rng.below(n);
      sa += a[i];
      sb += b[i];
    }
    if (sa < sb) below += 1.0;
    else if (sa == sb) below += 0.5;
    diffs.push_back((sa - sb) / static_cast<double>(n));
  }
  std::sort(diffs.begin(), diffs.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(diffs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, diffs.size() - 1);
    return diffs[lo] + (pos - static_cast<double>(lo)) * (diffs[hi] - diffs[lo]);
  };
  r.p_value = below / static_cast<double>(iterations);
  r.low = quantile(0.025);
  r.high = quantile(0.975);
  return r;
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "f1") return EvalMode::kF1;
  if (name == "limited_recall") return EvalMode::kLimitedRecall;
  if (name == "multisent") return EvalMode::kMultiSentence;
  throw std::invalid_argument("unknown eval mode '" + std::string(name) + "' (expected f1, limited_recall, multisent)");
}

namespace {

std::vector<Tokens> highlights(const std::vector<std::string>& parts) {
  std::vector<Tokens> out;
  for (const std::string& part : parts) {
    for (const Sentence& s : tokenize(part)) {
      std::string joined;
      for (const auto& w : s) joined += w + ' ';
      Tokens t = rouge_tokenize(joined);
      if (!t.empty()) out.push_back(std::move(t));
    }
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

nlohmann::ordered_json component_json(const RougeComponent& c) {
  nlohmann::ordered_json j;
  j["precision"] = c.precision;
  j["recall"] = c.recall;
  j["f1"] = c.f1;
  return j;
}

void accumulate(RougeComponent& total, const RougeComponent& c) {
  total.precision += c.precision;
  total.recall += c.recall;
  total.f1 += c.f1;
}

RougeComponent averaged(RougeComponent c, std::size_t n) {
  if (n == 0) return c;
  const double k = static_cast<double>(n);
  return {c.precision / k, c.recall / k, c.f1 / k};
}

}  // namespace

nlohmann::ordered_json evaluate_corpus(std::span<const EvalItem> items, EvalMode mode, std::size_t byte_budget) {
  RougeScore total;
  double copy_total = 0.0;
  std::size_t copy_count = 0;
  for (const EvalItem& item : items) {
    RougeScore s;
    switch (mode) {
      case EvalMode::kF1:
        s = rouge_all(rouge_tokenize(item.system), rouge_tokenize(join(item.reference)));
        break;
      case EvalMode::kLimitedRecall:
        s = rouge_limited_recall(item.system, rouge_tokenize(join(item.reference)), byte_budget);
        break;
      case EvalMode::kMultiSentence:
        s = rouge_multisent(highlights({item.system}), highlights(item.reference));
        break;
    }
    accumulate(total.rouge1, s.rouge1);
    accumulate(total.rouge2, s.rouge2);
    accumulate(total.rougeL, s.rougeL);
    if (!item.source.empty()) {
      const Tokens sys = rouge_tokenize(item.system);
      if (!sys.empty()) {
        copy_total += src_copy_rate(sys, rouge_tokenize(item.source));
        ++copy_count;
      }
    }
  }
  nlohmann::ordered_json report;
  report["rouge1"] = component_json(averaged(total.rouge1, items.size()));
  report["rouge2"] = component_json(averaged(total.rouge2, items.size()));
  report["rougeL"] = component_json(averaged(total.rougeL, items.size()));
  report["src_copy_rate"] = copy_count ? nlohmann::ordered_json(copy_total / static_cast<double>(copy_count)) : nullptr;
  report["n_examples"] = items.size();
  return report;
}

}  // namespace s2sum
