#pragma once

// Sparse approximate nullspace bases by right oblique conjugation with
// pivoting, and windowed M-orthogonalization of such bases.

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saddlekit/operator.hpp"

namespace saddlekit {

/// One accepted conjugation step: constraint column `constraint` was paired
/// with basis position `position`, after swapping in the column that sat at
/// `chosen`.
struct PivotStep {
  Index constraint = 0;
  Index position = 0;
  Index chosen = 0;
};

template <typename Scalar>
struct NullspaceBasisT {
  SparseMatrixT<Scalar> z;  // n x (n - effective_rank)
  Index effective_rank = 0;
  std::vector<PivotStep> pivot_log;
  std::vector<Index> dependent_columns;  // constraint columns judged dependent
  SparseMatrixT<Scalar> leading;         // first effective_rank columns of V, if kept

  Index nnz() const { return z.nonZeros(); }
};

using NullspaceBasis = NullspaceBasisT<double>;

struct OrthoParams {
  Index window = 5;
  double drop_tol = 0.0;
};

/// Raised by mgs_m_orth when a column has non-positive M-norm.
class NonPositiveNorm : public std::runtime_error {
 public:
  NonPositiveNorm(Index col, double value)
      : std::runtime_error("M-orthogonalization: column " + std::to_string(col) +
                           " has non-positive M-norm " + std::to_string(value)),
        column(col),
        m_norm_squared(value) {}
  Index column;
  double m_norm_squared;
};

/// Sparse approximate right oblique conjugation of B (n x m, m <= n).
///
/// V starts as the identity. For each constraint column b_i the coefficients
/// sigma_l = b_i^T v_l over the not-yet-used columns are formed, the largest
/// in modulus (lowest index on ties) becomes the pivot, and every trailing
/// column with |sigma_l / sigma_pivot| > rho is updated by axpy_drop with
/// drop tolerance tau. A constraint column whose best pivot is below
/// rank_tol * ||b_i|| * max_l ||v_l|| is declared dependent and skipped.
/// The unused trailing columns of V form the basis.
template <typename Scalar>
NullspaceBasisT<Scalar> saroc(const SparseMatrixT<Scalar>& b, std::type_identity_t<Scalar> rho,
                              std::type_identity_t<Scalar> tau, std::type_identity_t<Scalar> rank_tol = Scalar(1e-12), bool keep_leading = false) {
  const Index n = b.rows();
  const Index m = b.cols();
  if (m > n) {
    throw DimensionError("saroc: constraint matrix is " + std::to_string(n) + "x" +
                         std::to_string(m) + ", need m <= n");
  }
  if (rho < 0 || tau < 0 || rank_tol < 0) {
    throw std::invalid_argument("saroc: thresholds must be non-negative");
  }

  std::vector<SparseColumnT<Scalar>> v;
  v.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) v.push_back(unit_column<Scalar>(n, i));

  NullspaceBasisT<Scalar> out;
  VectorT<Scalar> bi = VectorT<Scalar>::Zero(n);
  std::vector<Scalar> sigma;
  Index p = 0;  // accepted pivots so far

  for (Index i = 0; i < m; ++i) {
    for (typename SparseMatrixT<Scalar>::InnerIterator it(b, i); it; ++it) bi(it.row()) = it.value();
    const Scalar bnorm = bi.norm();

    const Index trailing = n - p;
    sigma.assign(static_cast<std::size_t>(trailing), Scalar(0));
    Index lstar = 0;
    Scalar best(-1);
    Scalar max_col(0);
    for (Index l = 0; l < trailing; ++l) {
      const auto& col = v[static_cast<std::size_t>(p + l)];
      const Scalar s = sparse_dot(col, bi);
      sigma[static_cast<std::size_t>(l)] = s;
      if (std::abs(s) > best) {
        best = std::abs(s);
        lstar = l;
      }
      max_col = std::max(max_col, col.norm());
    }

    for (typename SparseMatrixT<Scalar>::InnerIterator it(b, i); it; ++it) bi(it.row()) = Scalar(0);

    if (trailing == 0 || !(best > rank_tol * bnorm * max_col)) {
      out.dependent_columns.push_back(i);
      continue;
    }

    std::swap(v[static_cast<std::size_t>(p)], v[static_cast<std::size_t>(p + lstar)]);
    std::swap(sigma[0], sigma[static_cast<std::size_t>(lstar)]);
    out.pivot_log.push_back({i, p, p + lstar});

    const auto& pivot_col = v[static_cast<std::size_t>(p)];
    for (Index j = p + 1; j < n; ++j) {
      const Scalar ratio = sigma[static_cast<std::size_t>(j - p)] / sigma[0];
      if (std::abs(ratio) > rho) {
        auto& target = v[static_cast<std::size_t>(j)];
        target = axpy_drop(target, -ratio, pivot_col, tau);
      }
    }
    ++p;
  }

  out.effective_rank = p;
  std::vector<SparseColumnT<Scalar>> tail(v.begin() + p, v.end());
  out.z = assemble_columns(n, tail);
  if (keep_leading) {
    std::vector<SparseColumnT<Scalar>> head(v.begin(), v.begin() + p);
    out.leading = assemble_columns(n, head);
  }
  return out;
}

/// Windowed modified Gram-Schmidt M-orthogonalization with dropping. Column
/// i is orthogonalized against the previous `window` output columns, entries
/// below drop_tol * ||z_i|| are removed, and the column is M-normalized.
template <typename Scalar>
SparseMatrixT<Scalar> mgs_m_orth(const SparseMatrixT<Scalar>& z, const LinearOperatorT<Scalar>& m,
                                 const OrthoParams& params) {
  if (params.window < 1) throw std::invalid_argument("mgs_m_orth: window must be >= 1");
  if (m.rows() != z.rows() || m.cols() != z.rows()) {
    throw DimensionError("mgs_m_orth: M must be " + std::to_string(z.rows()) + " square");
  }
  const Index n = z.rows();
  const Index k = z.cols();
  const Scalar tau = static_cast<Scalar>(params.drop_tol);

  std::vector<SparseColumnT<Scalar>> out;
  out.reserve(static_cast<std::size_t>(k));
  std::deque<VectorT<Scalar>> m_recent;  // M * zbar_j for the window

  for (Index i = 0; i < k; ++i) {
    VectorT<Scalar> zi = VectorT<Scalar>::Zero(n);
    for (typename SparseMatrixT<Scalar>::InnerIterator it(z, i); it; ++it) zi(it.row()) = it.value();

    const Index first = std::max<Index>(i - params.window, 0);
    for (Index j = first; j < i; ++j) {
      const auto& mz = m_recent[static_cast<std::size_t>(j - (i - static_cast<Index>(m_recent.size())))];
      const Scalar coef = mz.dot(zi);
      for (typename SparseColumnT<Scalar>::InnerIterator it(out[static_cast<std::size_t>(j)], 0); it;
           ++it) {
        zi(it.index()) -= coef * it.value();
      }
    }
    if (i > 0 && tau > Scalar(0)) {
      const Scalar threshold = tau * zi.norm();
      for (Index r = 0; r < n; ++r) {
        if (std::abs(zi(r)) < threshold) zi(r) = Scalar(0);
      }
    }

    VectorT<Scalar> mzi = m.apply(zi);
    const Scalar norm2 = zi.dot(mzi);
    if (!(norm2 > Scalar(0))) throw NonPositiveNorm(i, static_cast<double>(norm2));
    const Scalar inv = Scalar(1) / std::sqrt(norm2);
    zi *= inv;
    mzi *= inv;

    SparseColumnT<Scalar> s(n);
    for (Index r = 0; r < n; ++r) {
      if (zi(r) != Scalar(0)) s.insertBack(r) = zi(r);
    }
    out.push_back(std::move(s));
    m_recent.push_back(std::move(mzi));
    if (static_cast<Index>(m_recent.size()) > params.window) m_recent.pop_front();
  }
  return assemble_columns(n, out);
}

/// max |(B^T Z)_{ij}|, one column of Z at a time.
template <typename Scalar>
Scalar nullspace_residual(const SparseMatrixT<Scalar>& b, const SparseMatrixT<Scalar>& z) {
  if (b.rows() != z.rows()) {
    throw DimensionError("nullspace_residual: B has " + std::to_string(b.rows()) +
                         " rows but Z has " + std::to_string(z.rows()));
  }
  Scalar worst(0);
  VectorT<Scalar> zj = VectorT<Scalar>::Zero(z.rows());
  for (Index j = 0; j < z.cols(); ++j) {
    for (typename SparseMatrixT<Scalar>::InnerIterator it(z, j); it; ++it) zj(it.row()) = it.value();
    const VectorT<Scalar> prod = matvec_transpose(b, zj);
    if (prod.size()) worst = std::max(worst, prod.cwiseAbs().maxCoeff());
    for (typename SparseMatrixT<Scalar>::InnerIterator it(z, j); it; ++it) zj(it.row()) = Scalar(0);
  }
  return worst;
}

}  // namespace saddlekit
