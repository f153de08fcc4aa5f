// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "s2sum/attention.hpp"
#include "s2sum/decoder.hpp"
#include "s2sum/encoder.hpp"
#include "s2sum/model.hpp"
#include "support.hpp"

using namespace s2sum;

namespace {

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

double total(const Tensor& t) { return std::accumulate(t.values().begin(), t.values().end(), 0.0); }

Tensor random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return Tensor::vector(std::move(v));
}

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return Tensor::from({r, c}, std::move(v));
}

void copy_values(const GruCell& from, GruCell& to) {
  const Tensor* src[] = {&from.w_z, &from.u_z, &from.b_z, &from.w_r, &from.u_r, &from.b_r, &from.w_h, &from.u_h, &from.b_h};
  Tensor* dst[] = {&to.w_z, &to.u_z, &to.b_z, &to.w_r, &to.u_r, &to.b_r, &to.w_h, &to.u_h, &to.b_h};
  for (std::size_t i = 0; i < 9; ++i) {
    auto out = dst[i]->mutable_values();
    std::copy(src[i]->values().begin(), src[i]->values().end(), out.begin());
  }
}

ModelConfig toy_config(std::size_t vocab = 20) {
  ModelConfig c;
  c.source_vocab = vocab;
  c.target_vocab = vocab;
  c.word_dim = 8;
  c.hidden = 8;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// encoder

TEST_CASE("embedding widths") {
  ParamStore params;
  ModelConfig cfg = toy_config();
  cfg.word_dim = 100;
  cfg.features = true;
  const EmbeddingBank bank = EmbeddingBank::create(params, cfg);
  CHECK(bank.input_width(false) == 100);
  CHECK(bank.input_width(true) == 155);
  CHECK(cfg.encoder_input_dim() == 155);

  const Example ex = testing::random_example(4, 20, 10);
  Tape tape(false);
  const auto inputs = embed(tape, ex, bank, true);
  REQUIRE(inputs.size() == ex.doc_length());
  for (const Tensor& x : inputs) {
    CHECK(x.size() == 155);
    for (double v : x.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("embedding lookups out of range name the position") {
  ParamStore params;
  const EmbeddingBank bank = EmbeddingBank::create(params, toy_config());
  Example ex = testing::random_example(2, 20, 6);
  ex.doc_tokens[1] = 99;
  Tape tape(false);
  try {
    embed(tape, ex, bank, false);
    FAIL("expected a lookup error");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("position 1") != std::string::npos);
  }
}

TEST_CASE("gru step closed forms") {
  ParamStore params;
  const GruCell cell = GruCell::create(params, "g", 3, 4);
  Tape tape;
  const Tensor h = Tensor::vector({1.0, -2.0, 0.5, 4.0});
  const Tensor out = gru_step(tape, cell, Tensor::vector({0.3, 0.1, -0.2}), h);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.at(i) == doctest::Approx(0.5 * h.at(i)).epsilon(1e-15));
  const Tensor zero = gru_step(tape, cell, Tensor::vector({0.3, 0.1, -0.2}), Tensor::zeros({4}));
  for (double v : zero.values()) CHECK(v == 0.0);
  CHECK_THROWS(gru_step(tape, cell, Tensor::vector({1.0}), h));
}

TEST_CASE("gru step gradient matches finite differences") {
  ParamStore params;
  const GruCell cell = GruCell::create(params, "g", 3, 4);
  params.initialize(17, 0.5);
  Rng rng(3);
  const Tensor x = random_vector(rng, 3);
  const Tensor h = random_vector(rng, 4);
  const Tensor w = random_vector(rng, 4);
  auto loss = [&](Tape& tape) { return ops::dot(tape, gru_step(tape, cell, x, h), w); };
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  const auto f = [&] {
    Tape tape(false);
    return loss(tape).item();
  };
  Rng pick(5);
  const auto report = testing::check_params(params, f, pick, 100, 1e-5, 2);
  CHECK(report.worst_rel < 1e-4);
}

TEST_CASE("flat encoder shape, single position and reversal symmetry") {
  ParamStore params;
  const GruCell fwd = GruCell::create(params, "f", 5, 4);
  GruCell bwd = GruCell::create(params, "b", 5, 4);
  params.initialize(8, 0.5);
  copy_values(fwd, bwd);
  Rng rng(12);
  std::vector<Tensor> inputs;
  for (int i = 0; i < 6; ++i) inputs.push_back(random_vector(rng, 5));
  Tape tape(false);
  const EncoderStates s = encode_flat(tape, fwd, bwd, inputs, inputs.size());
  CHECK(s.word_states.shape() == Shape{6, 8});

  const std::vector<Tensor> one{inputs[0]};
  const EncoderStates single = encode_flat(tape, fwd, bwd, one, 1);
  CHECK(vals(single.forward[0]) == vals(single.backward[0]));

  std::vector<Tensor> reversed(inputs.rbegin(), inputs.rend());
  const EncoderStates r = encode_flat(tape, fwd, bwd, reversed, reversed.size());
  for (std::size_t j = 0; j < 6; ++j) {
    const auto a = vals(s.forward[j]), b = vals(r.backward[5 - j]);
    for (std::size_t k = 0; k < 4; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(encode_flat(tape, fwd, bwd, std::vector<Tensor>{}, 0), ContractError);
}

TEST_CASE("encoder outputs stay finite for bounded inputs") {
  ParamStore params;
  const GruCell fwd = GruCell::create(params, "f", 5, 6);
  const GruCell bwd = GruCell::create(params, "b", 5, 6);
  params.initialize(1, 0.1);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensor> inputs;
    for (std::size_t i = 0, n = 1 + rng.below(15); i < n; ++i) inputs.push_back(random_vector(rng, 5, 10.0));
    Tape tape(false);
    const EncoderStates s = encode_flat(tape, fwd, bwd, inputs, inputs.size());
    for (double v : s.word_states.values()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("hierarchical encoder") {
  ParamStore params;
  ModelConfig cfg = toy_config();
  const GruCell fwd = GruCell::create(params, "f", 5, cfg.hidden);
  const GruCell bwd = GruCell::create(params, "b", 5, cfg.hidden);
  const SentenceEncoder sentences = SentenceEncoder::create(params, cfg);
  params.initialize(4, 0.3);
  Rng rng(6);
  std::vector<Tensor> inputs;
  for (int i = 0; i < 7; ++i) inputs.push_back(random_vector(rng, 5));
  Tape tape(false);
  const std::vector<int> three{0, 0, 1, 1, 1, 2, 2};
  const EncoderStates h = encode_hierarchical(tape, fwd, bwd, sentences, inputs, three, 7);
  const EncoderStates flat = encode_flat(tape, fwd, bwd, inputs, 7);
  CHECK(vals(h.word_states) == vals(flat.word_states));
  REQUIRE(h.sent_states.rows() == 3);
  CHECK(h.sent_states.cols() == 2 * cfg.hidden + cfg.sentence_position_dim);
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < cfg.sentence_position_dim; ++k) {
      CHECK(h.sent_states.at(s, 2 * cfg.hidden + k) == sentences.positions.at(s, k));
    }
  }
  CHECK(h.sent_of_word == three);

  const std::vector<int> one(7, 0);
  CHECK(encode_hierarchical(tape, fwd, bwd, sentences, inputs, one, 7).sent_states.rows() == 1);
}

TEST_CASE("hierarchical encoder caps sentence positions at the table size") {
  ParamStore params;
  ModelConfig cfg = toy_config();
  cfg.sentence_positions = 2;
  const GruCell fwd = GruCell::create(params, "f", 3, cfg.hidden);
  const GruCell bwd = GruCell::create(params, "b", 3, cfg.hidden);
  const SentenceEncoder sentences = SentenceEncoder::create(params, cfg);
  params.initialize(4, 0.3);
  std::vector<Tensor> inputs(4, Tensor::vector({0.1, 0.2, 0.3}));
  const std::vector<int> ids{0, 1, 2, 3};
  Tape tape(false);
  const EncoderStates h = encode_hierarchical(tape, fwd, bwd, sentences, inputs, ids, 4);
  for (std::size_t k = 0; k < cfg.sentence_position_dim; ++k) {
    CHECK(h.sent_states.at(3, 2 * cfg.hidden + k) == sentences.positions.at(1, k));
  }
}

// ---------------------------------------------------------------------------
// attention

TEST_CASE("flat attention with zero parameters is uniform") {
  ParamStore params;
  const AttentionParams p = AttentionParams::create(params, "a", 4, 3, 6, 5);
  Rng rng(1);
  const Tensor states = random_matrix(rng, 7, 6);
  Tape tape(false);
  const Attended a = attend_flat(tape, p, project_keys(tape, p, states), states, random_vector(rng, 4),
                                 random_vector(rng, 3));
  for (double w : a.weights.values()) CHECK(w == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("flat attention is a distribution and its context a convex combination") {
  ParamStore params;
  const AttentionParams p = AttentionParams::create(params, "a", 4, 3, 6, 5);
  params.initialize(9, 1.0);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    Tensor states = random_matrix(rng, n, 6);
    // Duplicate a row to check equal weights at equal keys.
    if (n >= 2) {
      auto v = states.mutable_values();
      std::copy(v.begin(), v.begin() + 6, v.begin() + 6);
    }
    Tape tape(false);
    const Attended a = attend_flat(tape, p, project_keys(tape, p, states), states, random_vector(rng, 4),
                                   random_vector(rng, 3));
    CHECK(std::abs(total(a.weights) - 1.0) <= 1e-12);
    for (double w : a.weights.values()) CHECK(w >= 0.0);
    if (n >= 2) CHECK(a.weights.at(0) == a.weights.at(1));
    for (std::size_t k = 0; k < 6; ++k) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        lo = std::min(lo, states.at(j, k));
        hi = std::max(hi, states.at(j, k));
      }
      CHECK(a.context.at(k) >= lo - 1e-12);
      CHECK(a.context.at(k) <= hi + 1e-12);
    }
  }
}

TEST_CASE("masked attention puts no mass on padding") {
  ParamStore params;
  const AttentionParams p = AttentionParams::create(params, "a", 4, 3, 6, 5);
  params.initialize(9, 1.0);
  Rng rng(3);
  const Tensor states = random_matrix(rng, 5, 6);
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 0};
  Tape tape(false);
  const Attended a = attend_flat(tape, p, project_keys(tape, p, states), states, random_vector(rng, 4),
                                 random_vector(rng, 3), mask);
  CHECK(a.weights.at(3) == 0.0);
  CHECK(a.weights.at(4) == 0.0);
  CHECK(std::abs(total(a.weights) - 1.0) <= 1e-12);
}

TEST_CASE("sentence attention") {
  ParamStore params;
  const AttentionParams p = AttentionParams::create(params, "s", 4, 3, 6, 5);
  params.initialize(21, 1.0);
  Rng rng(4);
  const Tensor h = random_vector(rng, 4), e = random_vector(rng, 3);
  Tape tape(false);
  const Tensor one = random_matrix(rng, 1, 6);
  CHECK(attend_sentence(tape, p, project_keys(tape, p, one), h, e).at(0) == 1.0);

  // Position columns held at zero: permuting sentences permutes the weights.
  Tensor sents = random_matrix(rng, 4, 6);
  auto v = sents.mutable_values();
  for (std::size_t r = 0; r < 4; ++r) v[r * 6 + 4] = v[r * 6 + 5] = 0.0;
  const Tensor w = attend_sentence(tape, p, project_keys(tape, p, sents), h, e);
  CHECK(std::abs(total(w) - 1.0) <= 1e-12);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<double> pv(24);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 6; ++k) pv[r * 6 + k] = sents.at(perm[r], k);
  const Tensor permuted = Tensor::from({4, 6}, pv);
  const Tensor pw = attend_sentence(tape, p, project_keys(tape, p, permuted), h, e);
  for (std::size_t r = 0; r < 4; ++r) CHECK(pw.at(r) == doctest::Approx(w.at(perm[r])).epsilon(1e-14));
}

TEST_CASE("rescale_hierarchical examples") {
  Tape tape(false);
  const std::vector<int> two_per{0, 0, 1, 1};
  const Tensor r = rescale_hierarchical(tape, Tensor::vector({0.25, 0.25, 0.25, 0.25}), Tensor::vector({0.8, 0.2}),
                                        two_per);
  const std::vector<double> expect{0.4, 0.4, 0.1, 0.1};
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.at(i) - expect[i]) <= 1e-12);

  const Tensor pw = Tensor::vector({0.1, 0.2, 0.3, 0.4});
  const Tensor uniform = rescale_hierarchical(tape, pw, Tensor::vector({0.5, 0.5}), two_per);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(uniform.at(i) - pw.at(i)) <= 1e-12);
  const std::vector<int> single{0, 0, 0, 0};
  const Tensor one = rescale_hierarchical(tape, pw, Tensor::vector({1.0}), single);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(one.at(i) - pw.at(i)) <= 1e-12);

  CHECK_THROWS_AS(rescale_hierarchical(tape, Tensor::vector({0.5, 0.5, 0.0, 0.0}), Tensor::vector({0.0, 1.0}), two_per),
                  DegenerateAttentionError);
}

TEST_CASE("rescale_hierarchical with uniform sentences is the identity on random inputs") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t ns = 1 + rng.below(4);
    std::vector<int> sent;
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t k = 0, n = 1 + rng.below(3); k < n; ++k) sent.push_back(static_cast<int>(s));
    std::vector<double> pw(sent.size());
    for (auto& x : pw) x = 0.01 + rng.uniform();
    const double z = std::accumulate(pw.begin(), pw.end(), 0.0);
    for (auto& x : pw) x /= z;
    Tape tape(false);
    const Tensor out = rescale_hierarchical(tape, Tensor::vector(pw), Tensor::vector(std::vector<double>(ns, 1.0 / ns)),
                                            sent);
    CHECK(std::abs(total(out) - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < pw.size(); ++i) CHECK(std::abs(out.at(i) - pw[i]) <= 1e-12);
  }
}

TEST_CASE("temporal_rescale examples") {
  Tape tape(false);
  AttentionTrace trace;
  const Tensor a1 = temporal_rescale(tape, Tensor::vector({0.5, 0.5}), trace);
  CHECK(std::abs(a1.at(0) - 0.5) <= 1e-12);
  const Tensor a2 = temporal_rescale(tape, Tensor::vector({0.6, 0.4}), trace);
  CHECK(std::abs(a2.at(0) - 0.6) <= 1e-12);
  CHECK(std::abs(a2.at(1) - 0.4) <= 1e-12);
  CHECK(trace.steps() == 2);
  CHECK(std::abs(trace.beta.at(0) - 1.1) <= 1e-12);

  AttentionTrace first;
  const Tensor plain = temporal_rescale(tape, Tensor::vector({1.0, 3.0}), first);
  CHECK(std::abs(plain.at(1) - 0.75) <= 1e-12);
}

TEST_CASE("temporal_rescale penalizes positions attended before") {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    AttentionTrace trace;
    Tape tape(false);
    for (int step = 0; step < 3; ++step) {
      std::vector<double> raw(n);
      for (auto& x : raw) x = 0.05 + rng.uniform();
      temporal_rescale(tape, Tensor::vector(raw), trace);
    }
    std::vector<double> raw(n);
    for (auto& x : raw) x = 0.05 + rng.uniform();
    raw[1] = raw[0];
    const std::vector<double> beta = vals(trace.beta);
    const Tensor w = temporal_rescale(tape, Tensor::vector(raw), trace);
    CHECK(std::abs(total(w) - 1.0) <= 1e-12);
    if (beta[0] > beta[1]) CHECK(w.at(0) < w.at(1));
    if (beta[1] > beta[0]) CHECK(w.at(1) < w.at(0));
  }
}

// ---------------------------------------------------------------------------
// decoder

TEST_CASE("switch probability") {
  ParamStore params;
  SwitchParams p = SwitchParams::create(params, "s", 4, 3, 6, 5);
  Rng rng(3);
  const Tensor h = random_vector(rng, 4), e = random_vector(rng, 3), c = random_vector(rng, 6);
  Tape tape(false);
  CHECK(switch_probability(tape, h, e, c, p).item() == 0.5);

  params.initialize(12, 0.5);
  const double base = switch_probability(tape, h, e, c, p).item();
  const bool up = base > 0.5;
  double prev = base;
  for (double factor : {2.0, 4.0, 16.0, 256.0, 65536.0}) {
    Tensor v = p.v;
    const std::vector<double> orig = vals(v);
    auto mv = v.mutable_values();
    for (std::size_t i = 0; i < mv.size(); ++i) mv[i] = orig[i] * factor;
    const double s = switch_probability(tape, h, e, c, p).item();
    for (std::size_t i = 0; i < mv.size(); ++i) mv[i] = orig[i];
    CHECK((up ? s >= prev : s <= prev));
    prev = s;
  }
  CHECK((up ? prev > 1.0 - 1e-9 : prev < 1e-9));
}

TEST_CASE("switch probability gradient matches finite differences") {
  ParamStore params;
  const SwitchParams p = SwitchParams::create(params, "s", 4, 3, 6, 5);
  params.initialize(2, 0.5);
  Rng rng(6);
  const Tensor h = random_vector(rng, 4), e = random_vector(rng, 3), c = random_vector(rng, 6);
  params.zero_grad();
  {
    Tape tape;
    tape.backward(switch_probability(tape, h, e, c, p));
  }
  const auto f = [&] {
    Tape tape(false);
    return switch_probability(tape, h, e, c, p).item();
  };
  Rng pick(1);
  CHECK(testing::check_params(params, f, pick, 100, 1e-5, 2).worst_rel < 1e-4);
}

TEST_CASE("step loss examples") {
  DecoderStep step;
  step.lvt = std::make_shared<const std::vector<int>>(std::vector<int>{0, 1, 2, 3, 7});
  step.gen_dist = Tensor::vector({0, 0, 0, 0, 1});
  step.ptr_dist = Tensor::vector({0.5, 0.25, 0.25});
  step.switch_prob = Tensor::scalar(1.0);
  Tape tape(false);
  CHECK(step_loss(tape, step, 7, true, -1).item() == 0.0);

  step.switch_prob = Tensor::scalar(0.5);
  CHECK(std::abs(step_loss(tape, step, Vocabulary::kUnk, false, 0).item() - 2.0 * std::log(2.0)) <= 1e-12);

  CHECK_THROWS_AS(step_loss(tape, step, 5, true, -1), ContractError);

  step.switch_prob = Tensor::scalar(1.0);
  const double floored = step_loss(tape, step, Vocabulary::kUnk, false, 1).item();
  CHECK(std::isfinite(floored));
  CHECK(std::abs(floored - (std::log(4.0) - std::log(1e-12))) <= 1e-9);
}

TEST_CASE("generator distribution restricted to the batch vocabulary") {
  ParamStore params;
  const OutputLayer out = OutputLayer::create(params, "o", 30, 6);
  params.initialize(3, 1.0);
  Rng rng(4);
  const Tensor x = random_vector(rng, 6);
  Tape tape(false);
  const std::vector<int> all = [] {
    std::vector<int> v(30);
    std::iota(v.begin(), v.end(), 0);
    return v;
  }();
  const Tensor full = generator_distribution(tape, out, x, all);
  const Tensor direct = ops::softmax(tape, ops::add(tape, ops::matvec(tape, out.w, x), out.b));
  for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(full.at(i) - direct.at(i)) <= 1e-15);

  DecoderStep step;
  step.lvt = std::make_shared<const std::vector<int>>(std::vector<int>{0, 1, 2, 3, 10, 20});
  step.gen_dist = generator_distribution(tape, out, x, *step.lvt);
  CHECK(std::abs(total(step.gen_dist) - 1.0) <= 1e-12);
  CHECK(step.gen_probability(11) == 0.0);
  CHECK(step.gen_probability(20) > 0.0);

  const Tensor no_eos = generator_distribution(tape, out, x, *step.lvt, true);
  CHECK(no_eos.at(3) == 0.0);
  CHECK_THROWS_AS(generator_distribution(tape, out, x, std::vector<int>{}), ContractError);

  op_counters().multiplies = 0;
  generator_distribution(tape, out, x, all);
  const auto full_mults = op_counters().multiplies;
  op_counters().multiplies = 0;
  generator_distribution(tape, out, x, std::vector<int>{0, 1, 2});
  CHECK(op_counters().multiplies * 10 == full_mults);
}

TEST_CASE("emit picks the branch with the larger posterior") {
  const Vocabulary vocab = Vocabulary::build({{"alpha", "beta"}}, 10);
  const std::vector<std::string> doc{"w0", "w1", "w2", "w3", "w4", "zyzzyva"};
  DecoderStep step;
  step.lvt = std::make_shared<const std::vector<int>>(std::vector<int>{0, 1, 2, 3, 4, 5});
  step.gen_dist = Tensor::vector({0, 0, 0, 0, 0.7, 0.3});
  step.ptr_dist = Tensor::vector({0.05, 0.05, 0.05, 0.05, 0.8, 0.0});
  step.switch_prob = Tensor::scalar(0.9);
  Emission e = emit(step, doc, vocab);
  CHECK_FALSE(e.pointed);
  CHECK(e.surface == vocab.token(4));

  step.switch_prob = Tensor::scalar(0.2);
  e = emit(step, doc, vocab);
  CHECK(e.pointed);
  CHECK(e.copy_position == 4);
  CHECK(e.surface == "w4");

  step.ptr_dist = Tensor::vector({0, 0, 0, 0, 0, 1});
  e = emit(step, doc, vocab);
  CHECK(e.surface == "zyzzyva");
  CHECK_FALSE(vocab.contains("zyzzyva"));
}

TEST_CASE("decoder steps conserve probability mass in every mode") {
  for (int mode = 0; mode < 5; ++mode) {
    ModelConfig cfg = toy_config();
    cfg.pointer = mode != 0;
    cfg.features = mode == 2;
    cfg.hierarchical = mode == 3;
    cfg.temporal = mode == 4;
    const Summarizer model(cfg, 40 + mode);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Example ex = testing::random_example(seed, 20, 12);
      Tape tape(false);
      const EncodedDocument doc = model.encode(tape, ex, ex.doc_length() + 2);
      DecoderState state = model.start(tape, doc);
      for (int t = 0; t < 4; ++t) {
        const DecoderStep st = model.step(tape, doc, state, model.full_vocabulary());
        const double s = st.has_switch() ? st.switch_prob.item() : 1.0;
        CHECK(std::abs(s * total(st.gen_dist) + (1.0 - s) * total(st.ptr_dist) - 1.0) <= 1e-9);
        if (st.has_switch()) {
          CHECK(s > 0.0);
          CHECK(s < 1.0);
        }
        CHECK(std::abs(total(st.attention) - 1.0) <= 1e-12);
        for (std::size_t j = ex.doc_length(); j < ex.doc_length() + 2; ++j) CHECK(st.attention.at(j) == 0.0);
        state = model.advance(tape, doc, st, std::move(state), 5, t == 1 ? 0 : -1);
      }
    }
  }
}

TEST_CASE("copying feeds the source word embedding to the next step") {
  ModelConfig cfg = toy_config();
  cfg.pointer = true;
  const Summarizer model(cfg, 3);
  const Example ex = testing::random_example(5, 20, 8);
  Tape tape(false);
  const EncodedDocument doc = model.encode(tape, ex);
  DecoderState state = model.start(tape, doc);
  const DecoderStep st = model.step(tape, doc, state, model.full_vocabulary());
  const DecoderState next = model.advance(tape, doc, st, state, Vocabulary::kUnk, 2);
  const Tensor& table = model.params().get("enc.emb.word");
  for (std::size_t k = 0; k < cfg.word_dim; ++k) {
    CHECK(next.prev_embedding.at(k) == table.at(static_cast<std::size_t>(ex.doc_tokens[2]), k));
  }
}

TEST_CASE("padding leaves the sequence loss unchanged") {
  for (int mode = 0; mode < 5; ++mode) {
    ModelConfig cfg = toy_config();
    cfg.pointer = mode != 0;
    cfg.features = mode == 2;
    cfg.hierarchical = mode == 3;
    cfg.temporal = mode == 4;
    const Summarizer model(cfg, 7);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Example ex = testing::random_example(100 + seed, 20, 10);
      Tape tape(false);
      const double plain = model.sequence_loss(tape, ex, model.full_vocabulary()).item();
      const double padded = model.sequence_loss(tape, ex, model.full_vocabulary(), ex.doc_length() + 4).item();
      CHECK(std::abs(plain - padded) <= 1e-12 * std::max(1.0, std::abs(plain)));
    }
  }
}

TEST_CASE("sequence loss is finite and its gradient matches finite differences") {
  for (int mode = 0; mode < 5; ++mode) {
    ModelConfig cfg = toy_config();
    cfg.pointer = mode != 0;
    cfg.features = mode == 2;
    cfg.hierarchical = mode == 3;
    cfg.temporal = mode == 4;
    Summarizer model(cfg, 11 + mode);
    const Example ex = testing::random_example(900 + mode, 20, 12);
    const auto report = testing::check_sequence_loss(model, ex, 5, 3);
    INFO("mode " << mode << " worst " << report.worst_name);
    CHECK(report.worst_rel < 1e-4);
  }
}

TEST_CASE("model configuration validation") {
  ModelConfig cfg = toy_config();
  cfg.hierarchical = cfg.temporal = true;
  CHECK_THROWS(cfg.validate());
  cfg = toy_config();
  cfg.separate_pointer_attention = true;
  CHECK_THROWS(cfg.validate());
  cfg.pointer = true;
  CHECK_NOTHROW(cfg.validate());
  const ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("separate pointer attention has its own scorer") {
  ModelConfig cfg = toy_config();
  cfg.pointer = true;
  cfg.separate_pointer_attention = true;
  Summarizer model(cfg, 4);
  CHECK(model.params().contains("attn.ptr.v"));
  const Example ex = testing::random_example(2, 20, 9);
  CHECK(testing::check_sequence_loss(model, ex, 2, 3).worst_rel < 1e-4);
}
