#pragma once

// Define-by-run reverse-mode differentiation over dense Eigen matrices.
//
// A Tape records every operation in creation order, which is a topological
// order by construction. Var is a cheap handle (tape pointer + slot index);
// the free functions below build new slots and register their adjoints.

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srgnn/errors.hpp"

namespace srgnn::ad {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class Tape;

template <typename Scalar>
class Var {
 public:
  using Matrix = MatrixX<Scalar>;

  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape<Scalar>* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }

  const Matrix& value() const { return tape_->value(index_); }
  const Matrix& grad() const { return tape_->grad(index_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape<Scalar>* tape_ = nullptr;
  std::size_t index_ = 0;
};

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Scalar>
class Tape {
 public:
  using Matrix = MatrixX<Scalar>;
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input (parameters, free variables).
  Var<Scalar> leaf(Matrix value) { return push("leaf", std::move(value), true, {}); }

  // Input excluded from differentiation; its grad() stays empty.
  Var<Scalar> constant(Matrix value) { return push("constant", std::move(value), false, {}); }

  // Records an operation output. The adjoint is only kept when some input
  // requires a gradient.
  Var<Scalar> record(std::string_view op, Matrix value, std::initializer_list<Var<Scalar>> inputs,
                     Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) {
      check_owned(in, op);
      needs = needs || nodes_[in.index()].requires_grad;
    }
    return push(op, std::move(value), needs, needs ? std::move(backward) : Backward{});
  }

  Var<Scalar> record(std::string_view op, Matrix value, std::span<const Var<Scalar>> inputs,
                     Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) {
      check_owned(in, op);
      needs = needs || nodes_[in.index()].requires_grad;
    }
    return push(op, std::move(value), needs, needs ? std::move(backward) : Backward{});
  }

  // Fills every reachable grad with d(loss)/d(value). Grads are reset first,
  // so repeated calls give the same result and never touch values.
  void backward(const Var<Scalar>& loss) {
    check_owned(loss, "backward");
    const Matrix& v = nodes_[loss.index()].value;
    if (v.rows() != 1 || v.cols() != 1) {
      throw ContractError("backward: loss must be 1x1, got " + shape_string(v.rows(), v.cols()));
    }
    for (auto& node : nodes_) node.grad.setZero();
    if (!nodes_[loss.index()].requires_grad) return;
    nodes_[loss.index()].grad(0, 0) = Scalar(1);
    for (std::size_t i = loss.index() + 1; i-- > 0;) {
      auto& node = nodes_[i];
      if (node.requires_grad && node.backward) node.backward(*this, i);
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(std::size_t i) const { return nodes_[i].value; }
  const Matrix& grad(std::size_t i) const { return nodes_[i].grad; }
  Matrix& grad_mut(std::size_t i) { return nodes_[i].grad; }
  bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }
  bool requires_grad(const Var<Scalar>& v) const { return nodes_[v.index()].requires_grad; }

  void check_owned(const Var<Scalar>& v, std::string_view op) const {
    if (v.tape() != this || v.index() >= nodes_.size()) {
      throw ContractError(std::string(op) + ": operand belongs to a different tape");
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var<Scalar> push(std::string_view op, Matrix value, bool requires_grad, Backward backward) {
    if (!value.allFinite()) {
      throw NumericError(std::string(op) + ": produced a non-finite value");
    }
    Node node;
    // constants never receive adjoints, so they carry an empty grad
    if (requires_grad) node.grad = Matrix::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  // deque keeps references to existing nodes stable while new ones are pushed
  std::deque<Node> nodes_;
};

namespace detail {

template <typename Scalar>
Tape<Scalar>& same_tape(std::string_view op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands must share one tape");
  }
  return *a.tape();
}

template <typename Scalar>
void require_same_shape(std::string_view op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.rows(), a.cols()) +
                         " vs " + shape_string(b.rows(), b.cols()));
  }
}

template <typename Scalar>
void accumulate(Tape<Scalar>& t, const Var<Scalar>& v, const MatrixX<Scalar>& delta) {
  if (t.requires_grad(v)) t.grad_mut(v.index()) += delta;
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape("matmul", a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.rows(), a.cols()) + " x " +
                         shape_string(b.rows(), b.cols()));
  }
  MatrixX<Scalar> out = a.value() * b.value();
  return t.record("matmul", std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad_mut(a.index()).noalias() += g * b.value().transpose();
    if (tp.requires_grad(b)) tp.grad_mut(b.index()).noalias() += a.value().transpose() * g;
  });
}

// a * b^T, the row-stacked form of applying a weight matrix to each row.
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape("matmul_nt", a, b);
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + shape_string(a.rows(), a.cols()) + " x (" +
                         shape_string(b.rows(), b.cols()) + ")^T");
  }
  MatrixX<Scalar> out = a.value() * b.value().transpose();
  return t.record("matmul_nt", std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad_mut(a.index()).noalias() += g * b.value();
    if (tp.requires_grad(b)) tp.grad_mut(b.index()).noalias() += g.transpose() * a.value();
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  auto& t = *a.tape();
  MatrixX<Scalar> out = a.value().transpose();
  return t.record("transpose", std::move(out), {a}, [a](Tape<Scalar>& tp, std::size_t self) {
    tp.grad_mut(a.index()) += tp.grad(self).transpose();
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape("add", a, b);
  detail::require_same_shape("add", a, b);
  MatrixX<Scalar> out = a.value() + b.value();
  return t.record("add", std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, std::size_t self) {
    detail::accumulate(tp, a, tp.grad(self));
    detail::accumulate(tp, b, tp.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape("sub", a, b);
  detail::require_same_shape("sub", a, b);
  MatrixX<Scalar> out = a.value() - b.value();
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, std::size_t self) {
    detail::accumulate(tp, a, tp.grad(self));
    detail::accumulate<Scalar>(tp, b, -tp.grad(self));
  });
}

template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = detail::same_tape("hadamard", a, b);
  detail::require_same_shape("hadamard", a, b);
  MatrixX<Scalar> out = a.value().cwiseProduct(b.value());
  return t.record("hadamard", std::move(out), {a, b}, [a, b](Tape<Scalar>& tp, std::size_t self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(a)) tp.grad_mut(a.index()) += g.cwiseProduct(b.value());
    if (tp.requires_grad(b)) tp.grad_mut(b.index()) += g.cwiseProduct(a.value());
  });
}

// Adds a 1 x cols row to every row of a.
template <typename Scalar>
Var<Scalar> add_rowwise(const Var<Scalar>& a, const Var<Scalar>& row) {
  auto& t = detail::same_tape("add_rowwise", a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw DimensionError("add_rowwise: " + shape_string(a.rows(), a.cols()) + " + row " +
                         shape_string(row.rows(), row.cols()));
  }
  MatrixX<Scalar> out = a.value().rowwise() + row.value().row(0);
  return t.record("add_rowwise", std::move(out), {a, row},
                  [a, row](Tape<Scalar>& tp, std::size_t self) {
                    const auto& g = tp.grad(self);
                    detail::accumulate(tp, a, g);
                    if (tp.requires_grad(row)) tp.grad_mut(row.index()) += g.colwise().sum();
                  });
}

// alpha * a + beta, elementwise.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& a, Scalar alpha, Scalar beta = Scalar(0)) {
  auto& t = *a.tape();
  MatrixX<Scalar> out = (alpha * a.value().array() + beta).matrix();
  return t.record("affine", std::move(out), {a}, [a, alpha](Tape<Scalar>& tp, std::size_t self) {
    tp.grad_mut(a.index()) += alpha * tp.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  auto& t = *a.tape();
  MatrixX<Scalar> out = a.value().unaryExpr([](Scalar x) {
    // split by sign so exp never overflows
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  });
  return t.record("sigmoid", std::move(out), {a}, [a](Tape<Scalar>& tp, std::size_t self) {
    const auto& y = tp.value(self);
    tp.grad_mut(a.index()) +=
        tp.grad(self).cwiseProduct(y.cwiseProduct((Scalar(1) - y.array()).matrix()));
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  auto& t = *a.tape();
  MatrixX<Scalar> out = a.value().array().tanh().matrix();
  return t.record("tanh", std::move(out), {a}, [a](Tape<Scalar>& tp, std::size_t self) {
    const auto& y = tp.value(self);
    tp.grad_mut(a.index()) += tp.grad(self).cwiseProduct((Scalar(1) - y.array().square()).matrix());
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  auto& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(rows, parts.front().cols()) +
                           " vs " + shape_string(p.rows(), p.cols()));
    }
    cols += p.cols();
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var<Scalar>> inputs(parts.begin(), parts.end());
  return t.record("concat_cols", std::move(out), parts,
                  [inputs](Tape<Scalar>& tp, std::size_t self) {
                    Eigen::Index offset = 0;
                    for (const auto& p : inputs) {
                      const Eigen::Index c = p.cols();
                      if (tp.requires_grad(p)) {
                        tp.grad_mut(p.index()) += tp.grad(self).middleCols(offset, c);
                      }
                      offset += c;
                    }
                  });
}

template <typename Scalar>
Var<Scalar> concat_cols(const Var<Scalar>& a, const Var<Scalar>& b) {
  const Var<Scalar> parts[] = {a, b};
  return concat_cols(std::span<const Var<Scalar>>(parts));
}

template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  auto& t = *parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_string(parts.front().rows(), cols) + " vs " +
                           shape_string(p.rows(), p.cols()));
    }
    rows += p.rows();
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var<Scalar>> inputs(parts.begin(), parts.end());
  return t.record("concat_rows", std::move(out), parts,
                  [inputs](Tape<Scalar>& tp, std::size_t self) {
                    Eigen::Index offset = 0;
                    for (const auto& p : inputs) {
                      const Eigen::Index r = p.rows();
                      if (tp.requires_grad(p)) {
                        tp.grad_mut(p.index()) += tp.grad(self).middleRows(offset, r);
                      }
                      offset += r;
                    }
                  });
}

// Row-wise softmax with max subtraction.
template <typename Scalar>
Var<Scalar> softmax_row(const Var<Scalar>& a) {
  auto& t = *a.tape();
  MatrixX<Scalar> out(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const Scalar top = a.value().row(r).maxCoeff();
    out.row(r) = (a.value().row(r).array() - top).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return t.record("softmax_row", std::move(out), {a}, [a](Tape<Scalar>& tp, std::size_t self) {
    const auto& y = tp.value(self);
    const auto& g = tp.grad(self);
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
    tp.grad_mut(a.index()) += y.cwiseProduct((g.colwise() - dot));
  });
}

// Selects rows by index; the adjoint scatter-adds, so repeated indices are fine.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::span<const Eigen::Index> rows) {
  auto& t = *a.tape();
  MatrixX<Scalar> out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) {
      throw CatalogError("gather_rows: row " + std::to_string(rows[i]) + " outside " +
                         shape_string(a.rows(), a.cols()));
    }
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<Eigen::Index> idx(rows.begin(), rows.end());
  return t.record("gather_rows", std::move(out), {a},
                  [a, idx = std::move(idx)](Tape<Scalar>& tp, std::size_t self) {
                    auto& ga = tp.grad_mut(a.index());
                    const auto& g = tp.grad(self);
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                      ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                    }
                  });
}

// log(clamp(a, lo, hi)); the derivative is zero where the clamp is active.
template <typename Scalar>
Var<Scalar> log_clamped(const Var<Scalar>& a, Scalar lo, Scalar hi) {
  auto& t = *a.tape();
  MatrixX<Scalar> out = a.value().array().max(lo).min(hi).log().matrix();
  return t.record("log_clamped", std::move(out), {a}, [a, lo, hi](Tape<Scalar>& tp, std::size_t self) {
    const auto& x = a.value();
    const auto& g = tp.grad(self);
    auto& ga = tp.grad_mut(a.index());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Scalar v = x(i, j);
        if (v > lo && v < hi) ga(i, j) += g(i, j) / v;
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  auto& t = *a.tape();
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record("sum", std::move(out), {a}, [a](Tape<Scalar>& tp, std::size_t self) {
    tp.grad_mut(a.index()).array() += tp.grad(self)(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }

template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& a) { return affine(a, s); }

}  // namespace srgnn::ad
