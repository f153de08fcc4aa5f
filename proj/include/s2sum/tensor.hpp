// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major float64 arrays with a define-by-run reverse-mode tape.
//
// A Tensor is a cheap handle onto shared storage; copying a Tensor aliases
// the same values and gradient buffer. Differentiable operations take the
// Tape they record onto as their first argument. A tape that is not
// recording runs the forward computation only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2sum {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Raised when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller violates an operation precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool produced_by_op = false;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  /// Gradient buffer; empty when the tensor does not track gradients.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Constant copy of the current values, cut from any tape.
  Tensor detach() const;

  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& shared_node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  friend class Tape;

  std::shared_ptr<detail::TensorNode> node_;
};

class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Propagates d(loss)/d(tensor) into every reachable gradient buffer.
  /// Leaf gradients accumulate across calls; intermediate gradients are
  /// reset at the start of each call.
  void backward(const Tensor& loss);

  // Used by operation implementations.
  Tensor make_output(Shape shape, std::vector<double> values, bool requires_grad);
  void record(const Tensor& output, std::function<void()> backward_fn);

 private:
  struct Entry {
    std::shared_ptr<detail::TensorNode> output;
    std::function<void()> backward_fn;
  };

  bool recording_;
  std::vector<Entry> entries_;
};

/// Multiplication counts, per thread. Matrix-product style operations add
/// the number of scalar multiplies they perform.
struct OpCounters {
  std::uint64_t multiplies = 0;
};
OpCounters& op_counters();

namespace ops {

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// W[m x k] * x[k] -> [m]
Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x);
/// Selected rows of W[V x k] times x[k] -> [rows.size()]. Only the listed
/// rows are touched in both passes.
Tensor matvec_rows(Tape& tape, const Tensor& w, const Tensor& x, std::span<const int> rows);
/// w[n] * M[n x d] -> [d], i.e. a weighted sum of the rows of M.
Tensor vecmat(Tape& tape, const Tensor& w, const Tensor& m);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);
/// M[n x d] + v[d] added to every row.
Tensor add_rows(Tape& tape, const Tensor& m, const Tensor& v);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor one_minus(Tape& tape, const Tensor& a);

Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);
Tensor exp(Tape& tape, const Tensor& x);
/// log(max(x, floor)); the gradient is zero where the floor is active.
Tensor log_floor(Tape& tape, const Tensor& x, double floor);

/// Max-subtracted softmax over a vector. Masked-out positions (mask[i] == 0)
/// are exactly zero.
Tensor softmax(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask = {});
/// x / sum(x)
Tensor normalize(Tape& tape, const Tensor& x);

Tensor sum(Tape& tape, const Tensor& x);
Tensor dot(Tape& tape, const Tensor& a, const Tensor& b);
Tensor pick(Tape& tape, const Tensor& x, std::size_t index);
Tensor gather(Tape& tape, const Tensor& x, std::span<const int> index);
Tensor concat(Tape& tape, std::span<const Tensor> parts);
Tensor row(Tape& tape, const Tensor& m, std::size_t r);
Tensor stack_rows(Tape& tape, std::span<const Tensor> rows);

}  // namespace ops
}  // namespace s2sum
