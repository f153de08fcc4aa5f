// SPDX-License-Identifier: Apache-2.0

#include "s2sum/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace s2sum {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("tensor: shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(Shape{}, std::vector<double>{value}, requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows: expected a matrix, got " + shape_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols: expected a matrix, got " + shape_string(shape()));
  return shape()[1];
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item: tensor of shape " + shape_string(shape()) + " is not a scalar");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value.at(r * cols() + c);
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return from(shape(), node_->value, false);
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::make_output(Shape shape, std::vector<double> values, bool requires_grad) {
  Tensor out = Tensor::from(std::move(shape), std::move(values), requires_grad && recording_);
  out.node_->produced_by_op = true;
  return out;
}

void Tape::record(const Tensor& output, std::function<void()> backward_fn) {
  if (!output.requires_grad()) return;
  entries_.push_back(Entry{output.shared_node(), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  for (auto& entry : entries_) {
    std::fill(entry.output->grad.begin(), entry.output->grad.end(), 0.0);
  }
  detail::TensorNode* root = loss.node();
  if (!root->requires_grad) return;
  if (root->produced_by_op) {
    root->grad[0] = 1.0;
  } else {
    root->grad[0] += 1.0;
  }
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->backward_fn();
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace ops {
namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

template <typename Fn>
Tensor unary(Tape& tape, const Tensor& x, Fn&& forward, double (*local_grad)(double x, double y)) {
  std::vector<double> values(x.size());
  auto in = x.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = forward(in[i]);
  Tensor out = tape.make_output(x.shape(), std::move(values), x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node(), local_grad] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      xn->grad[i] += o->grad[i] * local_grad(xn->value[i], o->value[i]);
    }
  });
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> values(m * n, 0.0);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) values[i * n + j] += aip * bv[p * n + j];
    }
  }
  op_counters().multiplies += m * k * n;
  Tensor out = tape.make_output({m, n}, std::move(values), a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node(), m, k, n] {
    const auto& g = o->grad;
    if (an->requires_grad) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bn->value[p * n + j];
          an->grad[i * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = an->value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) bn->grad[p * n + j] += aip * g[i * n + j];
        }
    }
  });
  return out;
}

Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape()[1] != x.shape()[0]) {
    throw DimensionError("matvec: shape mismatch " + shape_string(w.shape()) + " vs " + shape_string(x.shape()));
  }
  const std::size_t m = w.shape()[0], k = w.shape()[1];
  std::vector<double> values(m, 0.0);
  auto wv = w.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const double* wr = wv.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) acc += wr[p] * xv[p];
    values[i] = acc;
  }
  op_counters().multiplies += m * k;
  Tensor out = tape.make_output({m}, std::move(values), w.requires_grad() || x.requires_grad());
  tape.record(out, [wn = w.shared_node(), xn = x.shared_node(), o = out.node(), m, k] {
    const auto& g = o->grad;
    for (std::size_t i = 0; i < m; ++i) {
      const double gi = g[i];
      if (gi == 0.0) continue;
      if (wn->requires_grad) {
        double* wg = wn->grad.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) wg[p] += gi * xn->value[p];
      }
      if (xn->requires_grad) {
        const double* wr = wn->value.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) xn->grad[p] += gi * wr[p];
      }
    }
  });
  return out;
}

Tensor matvec_rows(Tape& tape, const Tensor& w, const Tensor& x, std::span<const int> rows) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape()[1] != x.shape()[0]) {
    throw DimensionError("matvec_rows: shape mismatch " + shape_string(w.shape()) + " vs " +
                         shape_string(x.shape()));
  }
  const std::size_t v = w.shape()[0], k = w.shape()[1];
  for (int r : rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= v) {
      throw DimensionError("matvec_rows: row " + std::to_string(r) + " outside " + shape_string(w.shape()));
    }
  }
  std::vector<int> row_ids(rows.begin(), rows.end());
  std::vector<double> values(row_ids.size(), 0.0);
  auto wv = w.values();
  auto xv = x.values();
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    const double* wr = wv.data() + static_cast<std::size_t>(row_ids[i]) * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += wr[p] * xv[p];
    values[i] = acc;
  }
  op_counters().multiplies += row_ids.size() * k;
  Tensor out = tape.make_output({row_ids.size()}, std::move(values), w.requires_grad() || x.requires_grad());
  tape.record(out, [wn = w.shared_node(), xn = x.shared_node(), o = out.node(), ids = std::move(row_ids), k] {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double gi = o->grad[i];
      if (gi == 0.0) continue;
      const std::size_t base = static_cast<std::size_t>(ids[i]) * k;
      if (wn->requires_grad) {
        for (std::size_t p = 0; p < k; ++p) wn->grad[base + p] += gi * xn->value[p];
      }
      if (xn->requires_grad) {
        for (std::size_t p = 0; p < k; ++p) xn->grad[p] += gi * wn->value[base + p];
      }
    }
  });
  return out;
}

Tensor vecmat(Tape& tape, const Tensor& w, const Tensor& m) {
  if (w.rank() != 1 || m.rank() != 2 || m.shape()[0] != w.shape()[0]) {
    throw DimensionError("vecmat: shape mismatch " + shape_string(w.shape()) + " vs " + shape_string(m.shape()));
  }
  const std::size_t n = m.shape()[0], d = m.shape()[1];
  std::vector<double> values(d, 0.0);
  auto wv = w.values();
  auto mv = m.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = wv[i];
    if (wi == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) values[j] += wi * mv[i * d + j];
  }
  op_counters().multiplies += n * d;
  Tensor out = tape.make_output({d}, std::move(values), w.requires_grad() || m.requires_grad());
  tape.record(out, [wn = w.shared_node(), mn = m.shared_node(), o = out.node(), n, d] {
    const auto& g = o->grad;
    for (std::size_t i = 0; i < n; ++i) {
      if (wn->requires_grad) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += g[j] * mn->value[i * d + j];
        wn->grad[i] += acc;
      }
      if (mn->requires_grad) {
        const double wi = wn->value[i];
        for (std::size_t j = 0; j < d; ++j) mn->grad[i * d + j] += wi * g[j];
      }
    }
  });
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.values()[i] + b.values()[i];
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node()] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      if (an->requires_grad) an->grad[i] += o->grad[i];
      if (bn->requires_grad) bn->grad[i] += o->grad[i];
    }
  });
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.values()[i] - b.values()[i];
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node()] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      if (an->requires_grad) an->grad[i] += o->grad[i];
      if (bn->requires_grad) bn->grad[i] -= o->grad[i];
    }
  });
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.values()[i] * b.values()[i];
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node()] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      if (an->requires_grad) an->grad[i] += o->grad[i] * bn->value[i];
      if (bn->requires_grad) bn->grad[i] += o->grad[i] * an->value[i];
    }
  });
  return out;
}

Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("div", a, b);
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a.values()[i] / b.values()[i];
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node()] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      const double inv = 1.0 / bn->value[i];
      if (an->requires_grad) an->grad[i] += o->grad[i] * inv;
      if (bn->requires_grad) bn->grad[i] -= o->grad[i] * o->value[i] * inv;
    }
  });
  return out;
}

Tensor add_rows(Tape& tape, const Tensor& m, const Tensor& v) {
  if (m.rank() != 2 || v.rank() != 1 || m.shape()[1] != v.shape()[0]) {
    throw DimensionError("add_rows: shape mismatch " + shape_string(m.shape()) + " vs " + shape_string(v.shape()));
  }
  const std::size_t n = m.shape()[0], d = m.shape()[1];
  std::vector<double> values(m.values().begin(), m.values().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) values[i * d + j] += v.values()[j];
  Tensor out = tape.make_output(m.shape(), std::move(values), m.requires_grad() || v.requires_grad());
  tape.record(out, [mn = m.shared_node(), vn = v.shared_node(), o = out.node(), n, d] {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double g = o->grad[i * d + j];
        if (mn->requires_grad) mn->grad[i * d + j] += g;
        if (vn->requires_grad) vn->grad[j] += g;
      }
  });
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> values(a.values().begin(), a.values().end());
  for (double& x : values) x *= factor;
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad());
  tape.record(out, [an = a.shared_node(), o = out.node(), factor] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) an->grad[i] += o->grad[i] * factor;
  });
  return out;
}

Tensor one_minus(Tape& tape, const Tensor& a) {
  std::vector<double> values(a.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 1.0 - a.values()[i];
  Tensor out = tape.make_output(a.shape(), std::move(values), a.requires_grad());
  tape.record(out, [an = a.shared_node(), o = out.node()] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) an->grad[i] -= o->grad[i];
  });
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return unary(tape, x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape& tape, const Tensor& x) {
  return unary(tape, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(Tape& tape, const Tensor& x) {
  return unary(tape, x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log_floor(Tape& tape, const Tensor& x, double floor) {
  std::vector<double> values(x.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::log(std::max(x.values()[i], floor));
  Tensor out = tape.make_output(x.shape(), std::move(values), x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node(), floor] {
    for (std::size_t i = 0; i < o->grad.size(); ++i) {
      const double v = xn->value[i];
      if (v > floor) xn->grad[i] += o->grad[i] / v;
    }
  });
  return out;
}

Tensor softmax(Tape& tape, const Tensor& x, std::span<const std::uint8_t> mask) {
  require_rank("softmax", x, 1);
  const std::size_t n = x.size();
  if (n == 0) throw ContractError("softmax: empty input");
  if (!mask.empty() && mask.size() != n) {
    throw DimensionError("softmax: mask of length " + std::to_string(mask.size()) + " for input " +
                         shape_string(x.shape()));
  }
  auto keep = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };
  double max_v = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep(i)) continue;
    any = true;
    max_v = std::max(max_v, x.values()[i]);
  }
  if (!any) throw ContractError("softmax: invalid mask, every position is masked");
  std::vector<double> values(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep(i)) continue;
    values[i] = std::exp(x.values()[i] - max_v);
    total += values[i];
  }
  for (double& v : values) v /= total;
  Tensor out = tape.make_output(x.shape(), std::move(values), x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node()] {
    double s = 0.0;
    for (std::size_t i = 0; i < o->grad.size(); ++i) s += o->grad[i] * o->value[i];
    for (std::size_t i = 0; i < o->grad.size(); ++i) xn->grad[i] += o->value[i] * (o->grad[i] - s);
  });
  return out;
}

Tensor normalize(Tape& tape, const Tensor& x) {
  require_rank("normalize", x, 1);
  double total = 0.0;
  for (double v : x.values()) total += v;
  if (total == 0.0) throw ContractError("normalize: input sums to zero");
  std::vector<double> values(x.values().begin(), x.values().end());
  for (double& v : values) v /= total;
  Tensor out = tape.make_output(x.shape(), std::move(values), x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node(), total] {
    double s = 0.0;
    for (std::size_t i = 0; i < o->grad.size(); ++i) s += o->grad[i] * o->value[i];
    for (std::size_t i = 0; i < o->grad.size(); ++i) xn->grad[i] += (o->grad[i] - s) / total;
  });
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = tape.make_output({}, {total}, x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node()] {
    for (double& g : xn->grad) g += o->grad[0];
  });
  return out;
}

Tensor dot(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a.values()[i] * b.values()[i];
  op_counters().multiplies += a.size();
  Tensor out = tape.make_output({}, {total}, a.requires_grad() || b.requires_grad());
  tape.record(out, [an = a.shared_node(), bn = b.shared_node(), o = out.node()] {
    const double g = o->grad[0];
    for (std::size_t i = 0; i < an->value.size(); ++i) {
      if (an->requires_grad) an->grad[i] += g * bn->value[i];
      if (bn->requires_grad) bn->grad[i] += g * an->value[i];
    }
  });
  return out;
}

Tensor pick(Tape& tape, const Tensor& x, std::size_t index) {
  if (index >= x.size()) {
    throw DimensionError("pick: index " + std::to_string(index) + " outside " + shape_string(x.shape()));
  }
  Tensor out = tape.make_output({}, {x.values()[index]}, x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node(), index] { xn->grad[index] += o->grad[0]; });
  return out;
}

Tensor gather(Tape& tape, const Tensor& x, std::span<const int> index) {
  require_rank("gather", x, 1);
  std::vector<int> ids(index.begin(), index.end());
  std::vector<double> values(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= x.size()) {
      throw DimensionError("gather: index " + std::to_string(ids[i]) + " outside " + shape_string(x.shape()));
    }
    values[i] = x.values()[static_cast<std::size_t>(ids[i])];
  }
  Tensor out = tape.make_output({ids.size()}, std::move(values), x.requires_grad());
  tape.record(out, [xn = x.shared_node(), o = out.node(), ids = std::move(ids)] {
    for (std::size_t i = 0; i < ids.size(); ++i) xn->grad[static_cast<std::size_t>(ids[i])] += o->grad[i];
  });
  return out;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts) {
  std::vector<double> values;
  bool grad = false;
  for (const Tensor& p : parts) {
    require_rank("concat", p, 1);
    values.insert(values.end(), p.values().begin(), p.values().end());
    grad = grad || p.requires_grad();
  }
  const std::size_t n = values.size();
  Tensor out = tape.make_output({n}, std::move(values), grad);
  std::vector<NodePtr> nodes;
  nodes.reserve(parts.size());
  for (const Tensor& p : parts) nodes.push_back(p.shared_node());
  tape.record(out, [nodes = std::move(nodes), o = out.node()] {
    std::size_t offset = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        for (std::size_t i = 0; i < n->value.size(); ++i) n->grad[i] += o->grad[offset + i];
      }
      offset += n->value.size();
    }
  });
  return out;
}

Tensor row(Tape& tape, const Tensor& m, std::size_t r) {
  require_rank("row", m, 2);
  const std::size_t n = m.shape()[0], d = m.shape()[1];
  if (r >= n) throw DimensionError("row: index " + std::to_string(r) + " outside " + shape_string(m.shape()));
  std::vector<double> values(m.values().begin() + static_cast<std::ptrdiff_t>(r * d),
                             m.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  Tensor out = tape.make_output({d}, std::move(values), m.requires_grad());
  tape.record(out, [mn = m.shared_node(), o = out.node(), r, d] {
    for (std::size_t j = 0; j < d; ++j) mn->grad[r * d + j] += o->grad[j];
  });
  return out;
}

Tensor stack_rows(Tape& tape, std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: no rows");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  bool grad = false;
  for (const Tensor& r : rows) {
    require_rank("stack_rows", r, 1);
    if (r.size() != d) {
      throw DimensionError("stack_rows: shape mismatch " + shape_string(rows.front().shape()) + " vs " +
                           shape_string(r.shape()));
    }
    values.insert(values.end(), r.values().begin(), r.values().end());
    grad = grad || r.requires_grad();
  }
  Tensor out = tape.make_output({rows.size(), d}, std::move(values), grad);
  std::vector<NodePtr> nodes;
  for (const Tensor& r : rows) nodes.push_back(r.shared_node());
  tape.record(out, [nodes = std::move(nodes), o = out.node(), d] {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i]->requires_grad) continue;
      for (std::size_t j = 0; j < d; ++j) nodes[i]->grad[j] += o->grad[i * d + j];
    }
  });
  return out;
}

}  // namespace ops
}  // namespace s2sum
