#pragma once

// Compressed sparse-column storage and the column kernels shared by the
// conjugation, FSAI and M-orthogonalization passes.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace saddlekit {

using Index = Eigen::Index;

template <typename Scalar>
using SparseMatrixT = Eigen::SparseMatrix<Scalar, Eigen::ColMajor, Index>;

template <typename Scalar>
using SparseColumnT = Eigen::SparseVector<Scalar, Eigen::ColMajor, Index>;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using SparseMatrix = SparseMatrixT<double>;
using SparseColumn = SparseColumnT<double>;
using Vector = VectorT<double>;

/// Raised when operand dimensions do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool ok, const char* what, Index got, Index expected) {
  if (!ok) {
    throw DimensionError(std::string(what) + ": got " + std::to_string(got) +
                         ", expected " + std::to_string(expected));
  }
}

}  // namespace detail

/// Builds a compressed matrix from triplets, summing duplicates and purging
/// entries that end up exactly zero.
template <typename Scalar>
SparseMatrixT<Scalar> from_triplets(Index rows, Index cols,
                                    const std::vector<Eigen::Triplet<Scalar, Index>>& entries) {
  SparseMatrixT<Scalar> m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  m.prune(Scalar(0), Scalar(0));
  m.makeCompressed();
  return m;
}

/// Drops explicit zeros and leaves the matrix compressed.
template <typename Scalar>
void purge_zeros(SparseMatrixT<Scalar>& m) {
  m.prune([](const Index&, const Index&, const Scalar& v) { return v != Scalar(0); });
  m.makeCompressed();
}

/// y = A x, accumulated column by column in storage order.
template <typename Scalar, typename Derived>
VectorT<Scalar> matvec(const SparseMatrixT<Scalar>& a, const Eigen::MatrixBase<Derived>& x) {
  detail::require(x.size() == a.cols(), "matvec: vector length", x.size(), a.cols());
  VectorT<Scalar> y = VectorT<Scalar>::Zero(a.rows());
  for (Index j = 0; j < a.outerSize(); ++j) {
    const Scalar xj = x(j);
    if (xj == Scalar(0)) continue;
    for (typename SparseMatrixT<Scalar>::InnerIterator it(a, j); it; ++it) {
      y(it.row()) += it.value() * xj;
    }
  }
  return y;
}

/// y = A^T x; each output entry is a dot product in ascending row order.
template <typename Scalar, typename Derived>
VectorT<Scalar> matvec_transpose(const SparseMatrixT<Scalar>& a,
                                 const Eigen::MatrixBase<Derived>& x) {
  detail::require(x.size() == a.rows(), "matvec_transpose: vector length", x.size(), a.rows());
  VectorT<Scalar> y(a.cols());
  for (Index j = 0; j < a.outerSize(); ++j) {
    Scalar s(0);
    for (typename SparseMatrixT<Scalar>::InnerIterator it(a, j); it; ++it) {
      s += it.value() * x(it.row());
    }
    y(j) = s;
  }
  return y;
}

/// Removes every entry with |v| < tau * ||v||_2 (and every exact zero).
/// The norm is taken on the column as passed in.
template <typename Scalar>
void drop_small(SparseColumnT<Scalar>& v, std::type_identity_t<Scalar> tau) {
  const Scalar threshold = tau > Scalar(0) ? tau * v.norm() : Scalar(0);
  SparseColumnT<Scalar> kept(v.size());
  kept.reserve(v.nonZeros());
  for (typename SparseColumnT<Scalar>::InnerIterator it(v, 0); it; ++it) {
    if (it.value() != Scalar(0) && std::abs(it.value()) >= threshold) {
      kept.insertBack(it.index()) = it.value();
    }
  }
  v.swap(kept);
}

/// target + alpha * source followed by the relative drop rule. The norm used
/// by the drop rule is that of the updated column before anything is removed.
template <typename Scalar>
SparseColumnT<Scalar> axpy_drop(const SparseColumnT<Scalar>& target, std::type_identity_t<Scalar> alpha,
                                const SparseColumnT<Scalar>& source, std::type_identity_t<Scalar> tau) {
  detail::require(target.size() == source.size(), "axpy_drop: column length", source.size(),
                  target.size());
  if (tau < Scalar(0)) throw std::invalid_argument("axpy_drop: negative drop tolerance");

  SparseColumnT<Scalar> out(target.size());
  out.reserve(target.nonZeros() + source.nonZeros());
  typename SparseColumnT<Scalar>::InnerIterator t(target, 0);
  typename SparseColumnT<Scalar>::InnerIterator s(source, 0);
  while (t || s) {
    if (t && (!s || t.index() < s.index())) {
      out.insertBack(t.index()) = t.value();
      ++t;
    } else if (s && (!t || s.index() < t.index())) {
      out.insertBack(s.index()) = alpha * s.value();
      ++s;
    } else {
      out.insertBack(t.index()) = t.value() + alpha * s.value();
      ++t;
      ++s;
    }
  }
  drop_small(out, tau);
  return out;
}

/// Dot product of a sparse column with a dense vector.
template <typename Scalar, typename Derived>
Scalar sparse_dot(const SparseColumnT<Scalar>& v, const Eigen::MatrixBase<Derived>& dense) {
  Scalar s(0);
  for (typename SparseColumnT<Scalar>::InnerIterator it(v, 0); it; ++it) {
    s += it.value() * dense(it.index());
  }
  return s;
}

/// Column j of a compressed matrix as a standalone sparse column.
template <typename Scalar>
SparseColumnT<Scalar> column(const SparseMatrixT<Scalar>& a, Index j) {
  SparseColumnT<Scalar> v(a.rows());
  v.reserve(a.col(j).nonZeros());
  for (typename SparseMatrixT<Scalar>::InnerIterator it(a, j); it; ++it) {
    v.insertBack(it.row()) = it.value();
  }
  return v;
}

/// Unit column e_i of length n.
template <typename Scalar>
SparseColumnT<Scalar> unit_column(Index n, Index i) {
  SparseColumnT<Scalar> v(n);
  v.insertBack(i) = Scalar(1);
  return v;
}

/// Stacks sparse columns side by side.
template <typename Scalar>
SparseMatrixT<Scalar> assemble_columns(Index rows, const std::vector<SparseColumnT<Scalar>>& cols) {
  SparseMatrixT<Scalar> m(rows, static_cast<Index>(cols.size()));
  Index nnz = 0;
  for (const auto& c : cols) nnz += c.nonZeros();
  m.reserve(nnz);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    detail::require(cols[j].size() == rows, "assemble_columns: column length", cols[j].size(),
                    rows);
    m.startVec(static_cast<Index>(j));
    for (typename SparseColumnT<Scalar>::InnerIterator it(cols[j], 0); it; ++it) {
      if (it.value() != Scalar(0)) m.insertBack(it.index(), static_cast<Index>(j)) = it.value();
    }
  }
  m.finalize();
  m.makeCompressed();
  return m;
}

/// Splits a square matrix into (A + A^T)/2 and (A - A^T)/2.
template <typename Scalar>
std::pair<SparseMatrixT<Scalar>, SparseMatrixT<Scalar>> symmetric_split(
    const SparseMatrixT<Scalar>& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("symmetric_split: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
  const SparseMatrixT<Scalar> at = a.transpose();
  SparseMatrixT<Scalar> sym = (a + at) * Scalar(0.5);
  SparseMatrixT<Scalar> skew = (a - at) * Scalar(0.5);
  purge_zeros(sym);
  purge_zeros(skew);
  return {std::move(sym), std::move(skew)};
}

/// Exact (value and pattern) equality of two sparse matrices.
template <typename Scalar>
bool identical(const SparseMatrixT<Scalar>& a, const SparseMatrixT<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  SparseMatrixT<Scalar> ac = a;
  SparseMatrixT<Scalar> bc = b;
  purge_zeros(ac);
  purge_zeros(bc);
  if (ac.nonZeros() != bc.nonZeros()) return false;
  for (Index j = 0; j < ac.outerSize(); ++j) {
    typename SparseMatrixT<Scalar>::InnerIterator ia(ac, j);
    typename SparseMatrixT<Scalar>::InnerIterator ib(bc, j);
    for (; ia && ib; ++ia, ++ib) {
      if (ia.row() != ib.row() || ia.value() != ib.value()) return false;
    }
    if (ia || ib) return false;
  }
  return true;
}

/// Max absolute entry.
template <typename Scalar>
Scalar max_abs(const SparseMatrixT<Scalar>& a) {
  Scalar m(0);
  for (Index j = 0; j < a.outerSize(); ++j) {
    for (typename SparseMatrixT<Scalar>::InnerIterator it(a, j); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

/// Infinity norm (max absolute row sum).
template <typename Scalar>
Scalar norm_inf(const SparseMatrixT<Scalar>& a) {
  VectorT<Scalar> rows = VectorT<Scalar>::Zero(a.rows());
  for (Index j = 0; j < a.outerSize(); ++j) {
    for (typename SparseMatrixT<Scalar>::InnerIterator it(a, j); it; ++it) {
      rows(it.row()) += std::abs(it.value());
    }
  }
  return rows.size() ? rows.maxCoeff() : Scalar(0);
}

}  // namespace saddlekit
