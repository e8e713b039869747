#pragma once

// Lazily evaluated linear operators. Compositions (sums, scalings, products,
// transposes) hold their operands by value; nothing is materialized until
// materialize() is asked for explicitly.

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "saddlekit/sparse.hpp"

namespace saddlekit {

/// Raised when apply_transpose is requested from an operator built without one.
class TransposeUnavailable : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Scalar>
class LinearOperatorT {
 public:
  using Vec = VectorT<Scalar>;
  using ApplyFn = std::function<Vec(const Vec&)>;

  LinearOperatorT() = default;
  LinearOperatorT(Index rows, Index cols, ApplyFn apply, ApplyFn apply_transpose = {},
                  std::string descriptor = "op")
      : rows_(rows),
        cols_(cols),
        apply_(std::move(apply)),
        apply_t_(std::move(apply_transpose)),
        descriptor_(std::move(descriptor)) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool has_transpose() const { return static_cast<bool>(apply_t_); }
  const std::string& descriptor() const { return descriptor_; }

  Vec apply(const Vec& x) const {
    detail::require(x.size() == cols_, ("apply " + descriptor_).c_str(), x.size(), cols_);
    return apply_(x);
  }

  Vec apply_transpose(const Vec& x) const {
    if (!apply_t_) throw TransposeUnavailable("no transpose for " + descriptor_);
    detail::require(x.size() == rows_, ("apply_transpose " + descriptor_).c_str(), x.size(),
                    rows_);
    return apply_t_(x);
  }

  Vec operator()(const Vec& x) const { return apply(x); }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  ApplyFn apply_;
  ApplyFn apply_t_;
  std::string descriptor_;
};

using LinearOperator = LinearOperatorT<double>;

/// Wraps a sparse matrix; the operator shares ownership of an immutable copy.
template <typename Scalar>
LinearOperatorT<Scalar> wrap(SparseMatrixT<Scalar> m, std::string name = "M") {
  auto held = std::make_shared<const SparseMatrixT<Scalar>>(std::move(m));
  const Index r = held->rows();
  const Index c = held->cols();
  return LinearOperatorT<Scalar>(
      r, c, [held](const VectorT<Scalar>& x) { return matvec(*held, x); },
      [held](const VectorT<Scalar>& x) { return matvec_transpose(*held, x); }, std::move(name));
}

template <typename Scalar = double>
LinearOperatorT<Scalar> identity(Index n) {
  auto same = [](const VectorT<Scalar>& x) { return x; };
  return LinearOperatorT<Scalar>(n, n, same, same, "I");
}

template <typename Scalar>
LinearOperatorT<Scalar> transpose(const LinearOperatorT<Scalar>& op) {
  if (!op.has_transpose()) throw TransposeUnavailable("cannot transpose " + op.descriptor());
  return LinearOperatorT<Scalar>(
      op.cols(), op.rows(), [op](const VectorT<Scalar>& x) { return op.apply_transpose(x); },
      [op](const VectorT<Scalar>& x) { return op.apply(x); }, "(" + op.descriptor() + ")^T");
}

template <typename Scalar>
LinearOperatorT<Scalar> scale(std::type_identity_t<Scalar> alpha, const LinearOperatorT<Scalar>& op) {
  typename LinearOperatorT<Scalar>::ApplyFn t;
  if (op.has_transpose()) {
    t = [op, alpha](const VectorT<Scalar>& x) -> VectorT<Scalar> {
      return alpha * op.apply_transpose(x);
    };
  }
  return LinearOperatorT<Scalar>(
      op.rows(), op.cols(),
      [op, alpha](const VectorT<Scalar>& x) -> VectorT<Scalar> { return alpha * op.apply(x); },
      std::move(t), std::to_string(alpha) + "*" + op.descriptor());
}

/// a + beta * b.
template <typename Scalar>
LinearOperatorT<Scalar> sum(const LinearOperatorT<Scalar>& a, const LinearOperatorT<Scalar>& b,
                            std::type_identity_t<Scalar> beta = Scalar(1)) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("sum: " + a.descriptor() + " is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " but " + b.descriptor() + " is " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  typename LinearOperatorT<Scalar>::ApplyFn t;
  if (a.has_transpose() && b.has_transpose()) {
    t = [a, b, beta](const VectorT<Scalar>& x) -> VectorT<Scalar> {
      return a.apply_transpose(x) + beta * b.apply_transpose(x);
    };
  }
  const std::string sign = beta == Scalar(1) ? " + " : (beta == Scalar(-1) ? " - " : " + c*");
  return LinearOperatorT<Scalar>(
      a.rows(), a.cols(),
      [a, b, beta](const VectorT<Scalar>& x) -> VectorT<Scalar> {
        return a.apply(x) + beta * b.apply(x);
      },
      std::move(t), "(" + a.descriptor() + sign + b.descriptor() + ")");
}

/// a * b, applied right to left.
template <typename Scalar>
LinearOperatorT<Scalar> product(const LinearOperatorT<Scalar>& a,
                                const LinearOperatorT<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("product: " + a.descriptor() + " has " + std::to_string(a.cols()) +
                         " columns but " + b.descriptor() + " has " + std::to_string(b.rows()) +
                         " rows");
  }
  typename LinearOperatorT<Scalar>::ApplyFn t;
  if (a.has_transpose() && b.has_transpose()) {
    t = [a, b](const VectorT<Scalar>& x) { return b.apply_transpose(a.apply_transpose(x)); };
  }
  return LinearOperatorT<Scalar>(
      a.rows(), b.cols(), [a, b](const VectorT<Scalar>& x) { return a.apply(b.apply(x)); },
      std::move(t), a.descriptor() + "*" + b.descriptor());
}

/// Chain product of several operators, leftmost applied last.
template <typename Scalar>
LinearOperatorT<Scalar> chain(std::initializer_list<LinearOperatorT<Scalar>> ops) {
  if (ops.size() == 0) throw std::invalid_argument("chain: no operators");
  auto it = ops.begin();
  LinearOperatorT<Scalar> acc = *it++;
  for (; it != ops.end(); ++it) acc = product(acc, *it);
  return acc;
}

/// alpha * I + op.
template <typename Scalar>
LinearOperatorT<Scalar> shifted(std::type_identity_t<Scalar> alpha, const LinearOperatorT<Scalar>& op) {
  if (op.rows() != op.cols()) throw DimensionError("shifted: operator is not square");
  typename LinearOperatorT<Scalar>::ApplyFn t;
  if (op.has_transpose()) {
    t = [op, alpha](const VectorT<Scalar>& x) -> VectorT<Scalar> {
      return alpha * x + op.apply_transpose(x);
    };
  }
  return LinearOperatorT<Scalar>(
      op.rows(), op.cols(),
      [op, alpha](const VectorT<Scalar>& x) -> VectorT<Scalar> { return alpha * x + op.apply(x); },
      std::move(t), "(" + std::to_string(alpha) + "*I + " + op.descriptor() + ")");
}

template <typename Scalar>
LinearOperatorT<Scalar> operator*(const LinearOperatorT<Scalar>& a,
                                  const LinearOperatorT<Scalar>& b) {
  return product(a, b);
}

template <typename Scalar>
LinearOperatorT<Scalar> operator*(Scalar alpha, const LinearOperatorT<Scalar>& a) {
  return scale(alpha, a);
}

template <typename Scalar>
LinearOperatorT<Scalar> operator+(const LinearOperatorT<Scalar>& a,
                                  const LinearOperatorT<Scalar>& b) {
  return sum(a, b);
}

template <typename Scalar>
LinearOperatorT<Scalar> operator-(const LinearOperatorT<Scalar>& a,
                                  const LinearOperatorT<Scalar>& b) {
  return sum(a, b, Scalar(-1));
}

/// Applies op to every unit vector and collects the columns.
template <typename Scalar>
SparseMatrixT<Scalar> materialize(const LinearOperatorT<Scalar>& op) {
  std::vector<SparseColumnT<Scalar>> cols;
  cols.reserve(static_cast<std::size_t>(op.cols()));
  VectorT<Scalar> e = VectorT<Scalar>::Zero(op.cols());
  for (Index j = 0; j < op.cols(); ++j) {
    e(j) = Scalar(1);
    const VectorT<Scalar> c = op.apply(e);
    e(j) = Scalar(0);
    SparseColumnT<Scalar> s(op.rows());
    for (Index i = 0; i < c.size(); ++i) {
      if (c(i) != Scalar(0)) s.insertBack(i) = c(i);
    }
    cols.push_back(std::move(s));
  }
  return assemble_columns(op.rows(), cols);
}

}  // namespace saddlekit
