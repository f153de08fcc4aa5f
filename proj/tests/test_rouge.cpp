// SPDX-License-Identifier: Apache-2.0

#include <functional>
#include <stdexcept>

#include "doctest.h"
#include "s2sum/rouge.hpp"
#include "s2sum/rng.hpp"
#include "s2sum/tensor.hpp"

using namespace s2sum;

namespace {

Tokens words(std::string_view text) { return rouge_tokenize(text); }

// Memoized recursion over suffixes, independent of the table-filling LCS.
std::size_t lcs_oracle(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == a.size() || j == b.size()) return 0;
    int& slot = memo[i][j];
    if (slot >= 0) return slot;
    slot = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    return slot;
  };
  return static_cast<std::size_t>(go(0, 0));
}

Tokens random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Tokens t(rng.below(max_len + 1));
  for (auto& w : t) w = std::string(1, static_cast<char>('a' + rng.below(alphabet)));
  return t;
}

void check_component(const RougeComponent& c) {
  CHECK(c.precision >= 0.0);
  CHECK(c.precision <= 1.0);
  CHECK(c.recall >= 0.0);
  CHECK(c.recall <= 1.0);
  CHECK(c.f1 <= std::max(c.precision, c.recall) + 1e-15);
  if (c.precision + c.recall > 0)
    CHECK(c.f1 == doctest::Approx(2 * c.precision * c.recall / (c.precision + c.recall)));
  else
    CHECK(c.f1 == 0.0);
}

}  // namespace

TEST_CASE("rouge tokenization lowercases and strips punctuation") {
  CHECK(words("The Cat, ran!") == Tokens{"the", "cat", "ran"});
  CHECK(words("  ") == Tokens{});
  CHECK(words("caf\xc3\xa9 ok") == Tokens{"caf\xc3\xa9", "ok"});
}

TEST_CASE("rouge_n worked examples") {
  const auto r2 = rouge_n(words("the cat ran"), words("the cat sat"), 2);
  CHECK(r2.precision == 0.5);
  CHECK(r2.recall == 0.5);
  CHECK(r2.f1 == 0.5);

  const auto same = rouge_n(words("a b c"), words("a b c"), 1);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  const auto disjoint = rouge_n(words("x y z"), words("a b c"), 2);
  CHECK(disjoint.f1 == 0.0);

  // Clipping: "the" occurs twice in the system, once in the reference.
  const auto clipped = rouge_n(words("the the cat"), words("the cat"), 1);
  CHECK(clipped.precision == doctest::Approx(2.0 / 3.0));
  CHECK(clipped.recall == 1.0);

  // Reference shorter than n.
  CHECK(rouge_n(words("a b"), words("a"), 2).f1 == 0.0);
  CHECK_THROWS_AS(rouge_n(words("a"), words("a"), 3), std::invalid_argument);
}

TEST_CASE("rouge_l worked examples") {
  const auto l = rouge_l(words("a b c d"), words("a c b d"));
  CHECK(lcs_length(words("a b c d"), words("a c b d")) == 3);
  CHECK(l.precision == 0.75);
  CHECK(l.recall == 0.75);
  CHECK(rouge_l(words("x y"), words("x y")).f1 == 1.0);
  const auto empty = rouge_l(Tokens{}, words("a b"));
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
}

TEST_CASE("lcs matches an independent recursion on random pairs") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const Tokens a = random_tokens(rng, 12, 4);
    const Tokens b = random_tokens(rng, 12, 4);
    const std::size_t l = lcs_length(a, b);
    REQUIRE(l == lcs_oracle(a, b));
    CHECK(l <= std::min(a.size(), b.size()));
    CHECK(lcs_length(b, a) == l);
  }
}

TEST_CASE("rouge components are bounded and n-gram scores swap P and R") {
  Rng rng(202);
  for (int trial = 0; trial < 500; ++trial) {
    const Tokens a = random_tokens(rng, 10, 5);
    const Tokens b = random_tokens(rng, 10, 5);
    for (int n = 1; n <= 2; ++n) {
      if (a.size() < static_cast<std::size_t>(n) || b.size() < static_cast<std::size_t>(n)) continue;
      const auto ab = rouge_n(a, b, n);
      const auto ba = rouge_n(b, a, n);
      check_component(ab);
      CHECK(ab.precision == ba.recall);
      CHECK(ab.recall == ba.precision);
      CHECK(ab.f1 == doctest::Approx(ba.f1));
    }
    check_component(rouge_l(a, b));
  }
}

TEST_CASE("byte-budget truncation") {
  CHECK(truncate_to_budget("hello world", 5) == "hello");
  CHECK(truncate_to_budget("hello world", 6) == "hello ");
  CHECK(truncate_to_budget("hello world", 8) == "hello ");  // "wo" would split a token
  CHECK(truncate_to_budget("hello world", 3) == "");
  CHECK(truncate_to_budget("hello world", 11) == "hello world");
  CHECK(truncate_to_budget("hello world", 200) == "hello world");
  // "ab é" is 5 bytes; a cut inside the two-byte é backs off to the codepoint start
  // and then drops the partial token.
  CHECK(truncate_to_budget("ab \xc3\xa9 c", 4) == "ab ");
  CHECK(truncate_to_budget("ab \xc3\xa9 c", 5) == "ab \xc3\xa9");

  Rng rng(5);
  const std::string text = "one two three four five six seven eight nine ten eleven twelve";
  for (std::size_t budget = 1; budget <= text.size(); ++budget) {
    const std::string cut = truncate_to_budget(text, budget);
    CHECK(cut.size() <= budget);
    CHECK(text.compare(0, cut.size(), cut) == 0);
    for (const std::string& w : words(cut)) CHECK(words(text).end() != std::find(words(text).begin(), words(text).end(), w));
  }
}

TEST_CASE("limited-length recall") {
  const Tokens ref = words("hello there");
  const auto r = rouge_limited_recall("hello world", ref, 5);
  CHECK(r.rouge1.recall == 0.5);
  CHECK(r.rouge1.precision == 1.0);

  const std::string sys = "the cat sat on the mat";
  const Tokens ref2 = words("the cat sat on a mat");
  const auto full = rouge_all(words(sys), ref2);
  const auto limited = rouge_limited_recall(sys, ref2, 75);
  CHECK(limited.rouge1.recall == full.rouge1.recall);
  CHECK(limited.rouge2.recall == full.rouge2.recall);
  CHECK(limited.rougeL.recall == full.rougeL.recall);
  CHECK_THROWS_AS(rouge_limited_recall(sys, ref2, 0), std::invalid_argument);

  // Recall never increases as the budget shrinks.
  double prev = 1.0;
  for (std::size_t budget = sys.size(); budget >= 1; --budget) {
    const double rec = rouge_limited_recall(sys, ref2, budget).rouge1.recall;
    CHECK(rec <= prev + 1e-15);
    prev = rec;
  }
}

TEST_CASE("multi-sentence rouge") {
  const std::vector<Tokens> one_sys{words("the cat sat down")};
  const std::vector<Tokens> one_ref{words("the cat lay down")};
  const RougeScore multi = rouge_multisent(one_sys, one_ref);
  const RougeScore flat = rouge_all(one_sys[0], one_ref[0]);
  CHECK(multi.rouge1.f1 == flat.rouge1.f1);
  CHECK(multi.rouge2.f1 == flat.rouge2.f1);
  CHECK(multi.rougeL.f1 == flat.rougeL.f1);

  const std::vector<Tokens> two{words("a b c"), words("d e f")};
  const RougeScore same = rouge_multisent(two, two);
  CHECK(same.rouge1.f1 == 1.0);
  CHECK(same.rouge2.f1 == 1.0);
  CHECK(same.rougeL.f1 == 1.0);

  // The bigram "c d" straddles the system's boundary and never matches.
  const std::vector<Tokens> sys{words("a b c"), words("d e")};
  const std::vector<Tokens> ref{words("c d")};
  CHECK(rouge_multisent(sys, ref).rouge2.recall == 0.0);
  CHECK(rouge_all(words("a b c d e"), words("c d")).rouge2.recall == 1.0);

  // Union LCS: each reference sentence collects matches from every system sentence.
  const std::vector<Tokens> s2{words("w1 w2 w6 w7 w8"), words("w1 w3 w8 w9 w5")};
  const std::vector<Tokens> r2{words("w1 w2 w3 w4 w5")};
  CHECK(rouge_multisent(s2, r2).rougeL.recall == doctest::Approx(4.0 / 5.0));

  CHECK(rouge_multisent(sys, std::vector<Tokens>{}).rouge1.f1 == 0.0);
}

TEST_CASE("paired bootstrap") {
  Rng rng(8);
  std::vector<double> a(60);
  for (auto& x : a) x = rng.uniform();
  const auto same = bootstrap_significance(a, a, 1000, 3);
  CHECK(same.p_value == doctest::Approx(0.5).epsilon(0.05));
  CHECK(same.low <= 0.0);
  CHECK(same.high >= 0.0);
  CHECK(same.mean_diff == 0.0);

  std::vector<double> b(a);
  for (auto& x : b) x += 10.0;
  const auto sep = bootstrap_significance(a, b, 1000, 3);
  CHECK(sep.p_value == 1.0);
  const auto rev = bootstrap_significance(b, a, 1000, 3);
  CHECK(rev.p_value < 1.0 / 1000.0);
  CHECK(rev.low > 0.0);
  CHECK(rev.mean_diff == doctest::Approx(10.0));

  std::vector<double> noisy(a);
  for (auto& x : noisy) x += 0.1 * (rng.uniform() - 0.4);
  const auto x = bootstrap_significance(noisy, a, 500, 11);
  const auto y = bootstrap_significance(noisy, a, 500, 11);
  CHECK(x.p_value == y.p_value);
  CHECK(x.low == y.low);
  CHECK(x.high == y.high);
  CHECK(x.low <= x.mean_diff);
  CHECK(x.mean_diff <= x.high);

  CHECK_THROWS_AS(bootstrap_significance(a, std::vector<double>(3, 0.0), 10, 1), ContractError);
  CHECK_THROWS_AS(bootstrap_significance(std::vector<double>{1.0}, std::vector<double>{1.0}, 10, 1), ContractError);
}

TEST_CASE("eval modes and the corpus report") {
  CHECK(parse_eval_mode("f1") == EvalMode::kF1);
  CHECK(parse_eval_mode("limited_recall") == EvalMode::kLimitedRecall);
  CHECK(parse_eval_mode("multisent") == EvalMode::kMultiSentence);
  CHECK_THROWS_AS(parse_eval_mode("bleu"), std::invalid_argument);

  const std::vector<EvalItem> items{{"the cat sat .", {"the cat sat ."}, "the cat sat on the mat ."},
                                    {"a dog ran", {"a dog ran"}, ""}};
  for (EvalMode mode : {EvalMode::kF1, EvalMode::kLimitedRecall, EvalMode::kMultiSentence}) {
    const auto report = evaluate_corpus(items, mode, 75);
    std::vector<std::string> keys;
    for (auto it = report.begin(); it != report.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"rouge1", "rouge2", "rougeL", "src_copy_rate", "n_examples"});
    CHECK(report["rouge1"]["f1"].get<double>() == 1.0);
    CHECK(report["rougeL"]["recall"].get<double>() == 1.0);
    CHECK(report["src_copy_rate"].get<double>() == 100.0);
    CHECK(report["n_examples"].get<int>() == 2);
  }
}
