// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training: bucketed shuffling, Adadelta with global-norm
// clipping, per-token loss, and early stopping on validation loss.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "s2sum/example.hpp"
#include "s2sum/model.hpp"
#include "s2sum/model_config.hpp"
#include "s2sum/params.hpp"
#include "s2sum/rng.hpp"

namespace s2sum {

struct TrainConfig {
  ModelConfig model;
  std::size_t batch_size = 50;
  std::size_t lvt_size = 2000;
  double clip_norm = 5.0;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::uint64_t seed = 1;
  double rho = 0.95;
  double epsilon = 1e-6;
  double rate = 1.0;  // multiplies every Adadelta step
  double switch_l2 = 0.0;

  /// Throws std::invalid_argument.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct Batch {
  std::vector<const Example*> examples;
  std::size_t padded_length = 0;  // longest source in the batch
};

/// Shuffles with a generator keyed on (seed, epoch), sorts every window of
/// 10 * batch_size examples by source length, then cuts consecutive batches.
std::vector<Batch> make_batches(const std::vector<Example>& examples, std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch);

/// Consecutive batches in corpus order, for evaluation.
std::vector<Batch> sequential_batches(const std::vector<Example>& examples, std::size_t batch_size);

struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  double rate = 1.0;
  std::vector<std::vector<double>> mean_sq_grad;    // E[g²]
  std::vector<std::vector<double>> mean_sq_update;  // E[Δx²]

  AdadeltaState() = default;
  AdadeltaState(const ParamStore& params, double rho, double epsilon, double rate);
};

/// One elementwise Adadelta step on a single buffer.
void adadelta_step(std::span<double> x, std::span<const double> g, std::span<double> mean_sq_grad,
                   std::span<double> mean_sq_update, double rho, double epsilon, double rate);

/// Applies one Adadelta step to every parameter using its gradient buffer.
void adadelta_update(ParamStore& params, AdadeltaState& state);

/// Scales the buffers so their global L2 norm is at most clip_norm. Returns
/// the norm before clipping.
double clip_gradients(std::span<const std::span<double>> grads, double clip_norm);
double clip_gradients(ParamStore& params, double clip_norm);

/// Tracks the best validation loss and counts epochs without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  /// Records an epoch's validation loss. Returns true when training should stop.
  bool update(std::size_t epoch, double valid_loss);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
  std::size_t bad_epochs_ = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  std::size_t skipped_batches = 0;
};

/// Per-token loss of `examples` without recording gradients.
double evaluate_loss(const Summarizer& model, const std::vector<Example>& examples, const Vocabulary& decoder_vocab,
                     std::size_t lvt_size, std::size_t batch_size);

/// Trains `model` in place and leaves it holding the parameters of the epoch
/// with the lowest validation loss. Epoch lines go to `log` when given.
TrainResult train(Summarizer& model, const TrainConfig& config, const std::vector<Example>& train_set,
                  const std::vector<Example>& valid_set, const Vocabulary& decoder_vocab, std::ostream* log = nullptr);

}  // namespace s2sum
