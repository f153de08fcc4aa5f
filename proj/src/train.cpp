// SPDX-License-Identifier: Apache-2.0

#include "s2sum/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numeric>

namespace s2sum {

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be at least 1");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("train config: clip_norm must be positive");
  if (lvt_size < 4) throw std::invalid_argument("train config: lvt_size must cover the 4 special tokens");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("train config: rho must be in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("train config: epsilon must be positive");
  if (!(rate > 0.0)) throw std::invalid_argument("train config: rate must be positive");
  if (switch_l2 < 0.0) throw std::invalid_argument("train config: switch_l2 must be nonnegative");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["lvt_size"] = lvt_size;
  j["clip_norm"] = clip_norm;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["seed"] = seed;
  j["rho"] = rho;
  j["epsilon"] = epsilon;
  j["rate"] = rate;
  j["switch_l2"] = switch_l2;
  j["model"] = model.to_json();
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("batch_size", c.batch_size);
  get("lvt_size", c.lvt_size);
  get("clip_norm", c.clip_norm);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  get("seed", c.seed);
  get("rho", c.rho);
  get("epsilon", c.epsilon);
  get("rate", c.rate);
  get("switch_l2", c.switch_l2);
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  return c;
}

namespace {

std::uint64_t epoch_seed(std::uint64_t seed, std::uint64_t epoch) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<Batch> cut_batches(const std::vector<const Example*>& order, std::size_t batch_size) {
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    const std::size_t end = std::min(order.size(), start + batch_size);
    b.examples.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
    for (const Example* ex : b.examples) b.padded_length = std::max(b.padded_length, ex->doc_length());
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace

std::vector<Batch> make_batches(const std::vector<Example>& examples, std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be at least 1");
  Rng rng(epoch_seed(seed, epoch));
  const std::vector<std::size_t> perm = shuffled_indices(examples.size(), rng);
  std::vector<const Example*> order;
  order.reserve(perm.size());
  for (std::size_t i : perm) order.push_back(&examples[i]);

  const std::size_t window = 10 * batch_size;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + window));
    std::stable_sort(first, last, [](const Example* a, const Example* b) { return a->doc_length() < b->doc_length(); });
  }
  return cut_batches(order, batch_size);
}

std::vector<Batch> sequential_batches(const std::vector<Example>& examples, std::size_t batch_size) {
  if (batch_size < 1) throw std::invalid_argument("sequential_batches: batch_size must be at least 1");
  std::vector<const Example*> order;
  for (const Example& ex : examples) order.push_back(&ex);
  return cut_batches(order, batch_size);
}

AdadeltaState::AdadeltaState(const ParamStore& params, double rho_, double epsilon_, double rate_)
    : rho(rho_), epsilon(epsilon_), rate(rate_) {
  for (const auto& e : params.entries()) {
    mean_sq_grad.emplace_back(e.tensor.size(), 0.0);
    mean_sq_update.emplace_back(e.tensor.size(), 0.0);
  }
}

void adadelta_step(std::span<double> x, std::span<const double> g, std::span<double> mean_sq_grad,
                   std::span<double> mean_sq_update, double rho, double epsilon, double rate) {
  if (g.size() != x.size() || mean_sq_grad.size() != x.size() || mean_sq_update.size() != x.size()) {
    throw DimensionError("adadelta_step: buffer sizes disagree");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_sq_grad[i] = rho * mean_sq_grad[i] + (1.0 - rho) * g[i] * g[i];
    const double dx = -(std::sqrt(mean_sq_update[i] + epsilon) / std::sqrt(mean_sq_grad[i] + epsilon)) * g[i];
    mean_sq_update[i] = rho * mean_sq_update[i] + (1.0 - rho) * dx * dx;
    x[i] += rate * dx;
  }
}

void adadelta_update(ParamStore& params, AdadeltaState& state) {
  const auto& entries = params.entries();
  if (state.mean_sq_grad.size() != entries.size()) throw DimensionError("adadelta_update: state/parameter mismatch");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor t = entries[k].tensor;
    adadelta_step(t.mutable_values(), t.grad(), state.mean_sq_grad[k], state.mean_sq_update[k], state.rho,
                  state.epsilon, state.rate);
  }
}

double clip_gradients(std::span<const std::span<double>> grads, double clip_norm) {
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_gradients: clip_norm must be positive");
  double sq = 0.0;
  for (const auto& g : grads)
    for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double factor = clip_norm / norm;
    for (const auto& g : grads)
      for (double& v : g) v *= factor;
  }
  return norm;
}

double clip_gradients(ParamStore& params, double clip_norm) {
  std::vector<std::span<double>> grads;
  for (const auto& e : params.entries()) {
    Tensor t = e.tensor;
    grads.push_back(t.mutable_grad());
  }
  return clip_gradients(grads, clip_norm);
}

bool EarlyStopping::update(std::size_t epoch, double valid_loss) {
  improved_ = !has_best_ || valid_loss < best_loss_;
  if (improved_) {
    has_best_ = true;
    best_loss_ = valid_loss;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return false;
  }
  ++bad_epochs_;
  return bad_epochs_ >= patience_;
}

namespace {

std::shared_ptr<const std::vector<int>> batch_lvt(const Batch& batch, const Vocabulary& decoder_vocab,
                                                   std::size_t lvt_size) {
  return std::make_shared<const std::vector<int>>(lvt_batch_vocab(batch.examples, decoder_vocab, lvt_size));
}

std::size_t target_count(const Example& ex) { return ex.summary_tokens.empty() ? 0 : ex.summary_tokens.size() - 1; }

}  // namespace

double evaluate_loss(const Summarizer& model, const std::vector<Example>& examples, const Vocabulary& decoder_vocab,
                     std::size_t lvt_size, std::size_t batch_size) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const Batch& batch : sequential_batches(examples, batch_size)) {
    const auto lvt = batch_lvt(batch, decoder_vocab, lvt_size);
    for (const Example* ex : batch.examples) {
      Tape tape(false);
      std::size_t n = 0;
      total += model.sequence_loss(tape, *ex, lvt, batch.padded_length, &n).item();
      tokens += n;
    }
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

TrainResult train(Summarizer& model, const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& valid_set, const Vocabulary& decoder_vocab, std::ostream* log) {
  config.validate();
  if (train_set.empty() || valid_set.empty()) throw std::invalid_argument("train: empty training or validation set");
  model.set_switch_l2(config.switch_l2);
  ParamStore& params = model.params();
  AdadeltaState state(params, config.rho, config.epsilon, config.rate);
  EarlyStopping stopper(config.patience);
  std::vector<std::vector<double>> best = params.snapshot();
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (const Batch& batch : make_batches(train_set, config.batch_size, config.seed, epoch)) {
      const auto lvt = batch_lvt(batch, decoder_vocab, config.lvt_size);
      std::size_t tokens = 0;
      for (const Example* ex : batch.examples) tokens += target_count(*ex);
      if (tokens == 0) continue;
      const double inv = 1.0 / static_cast<double>(tokens);

      params.zero_grad();
      double batch_loss = 0.0;
      for (const Example* ex : batch.examples) {
        Tape tape;
        const Tensor loss = model.sequence_loss(tape, *ex, lvt, batch.padded_length);
        batch_loss += loss.item();
        tape.backward(ops::scale(tape, loss, inv));
      }
      const double norm = params.grad_norm();
      if (!std::isfinite(norm) || !std::isfinite(batch_loss)) {
        ++result.skipped_batches;
        std::clog << "warning: skipped batch with non-finite gradient (" << result.skipped_batches << " so far)\n";
        continue;
      }
      clip_gradients(params, config.clip_norm);
      adadelta_update(params, state);
      epoch_loss += batch_loss;
      epoch_tokens += tokens;
    }
    if (!params.all_finite()) throw DivergenceError("parameters became non-finite in epoch " + std::to_string(epoch));

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_tokens ? epoch_loss / static_cast<double>(epoch_tokens) : 0.0;
    entry.valid_loss = evaluate_loss(model, valid_set, decoder_vocab, config.lvt_size, config.batch_size);
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.epochs.push_back(entry);
    if (log) {
      *log << "epoch=" << entry.epoch << " train_loss=" << std::setprecision(6) << std::fixed << entry.train_loss
           << " valid_loss=" << entry.valid_loss << " seconds=" << std::setprecision(3) << entry.seconds
           << std::defaultfloat << std::endl;
    }
    if (!std::isfinite(entry.valid_loss)) {
      throw DivergenceError("validation loss is " + std::to_string(entry.valid_loss) + " after epoch " +
                            std::to_string(epoch));
    }
    const bool stop = stopper.update(epoch, entry.valid_loss);
    if (stopper.improved()) best = params.snapshot();
    if (stop) break;
  }
  params.restore(best);
  result.best_epoch = stopper.best_epoch();
  result.best_valid_loss = stopper.best_loss();
  return result;
}

}  // namespace s2sum
