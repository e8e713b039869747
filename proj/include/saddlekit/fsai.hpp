#pragma once

// Factorized sparse approximate inverse of a symmetric positive definite
// operator by A-conjugation. The operator is never formed; its columns are
// extracted one at a time through apply(e_j).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "saddlekit/operator.hpp"

namespace saddlekit {

template <typename Scalar>
struct FsaiFactorT {
  SparseMatrixT<Scalar> w;           // upper triangular, W^T N W ~ I
  std::vector<Scalar> diag_values;   // conjugation pivots before the 1/sqrt scaling

  Index nnz() const { return w.nonZeros(); }
};

using FsaiFactor = FsaiFactorT<double>;

class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(Index col, double value)
      : std::runtime_error("FSAI: pivot " + std::to_string(value) + " at column " +
                           std::to_string(col) + " is not positive"),
        column(col),
        pivot(value) {}
  Index column;
  double pivot;
};

/// Builds W with W^T (N + shift I) W ~ I. Pivots at or below
/// 1e-14 * ||n_j|| * ||w_j|| raise NotPositiveDefinite.
template <typename Scalar>
FsaiFactorT<Scalar> fsai(const LinearOperatorT<Scalar>& ns, Index dim, std::type_identity_t<Scalar> rho,
                         std::type_identity_t<Scalar> tau, std::type_identity_t<Scalar> shift = Scalar(0)) {
  if (ns.rows() != dim || ns.cols() != dim) {
    throw DimensionError("fsai: operator is " + std::to_string(ns.rows()) + "x" +
                         std::to_string(ns.cols()) + ", expected " + std::to_string(dim) +
                         " square");
  }
  if (rho < 0 || tau < 0) throw std::invalid_argument("fsai: thresholds must be non-negative");

  std::vector<SparseColumnT<Scalar>> w;
  w.reserve(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) w.push_back(unit_column<Scalar>(dim, i));

  FsaiFactorT<Scalar> out;
  out.diag_values.resize(static_cast<std::size_t>(dim));
  VectorT<Scalar> e = VectorT<Scalar>::Zero(dim);
  std::vector<Scalar> sigma(static_cast<std::size_t>(dim));

  for (Index j = 0; j < dim; ++j) {
    e(j) = Scalar(1);
    VectorT<Scalar> nj = ns.apply(e);
    e(j) = Scalar(0);
    if (shift != Scalar(0)) nj(j) += shift;

    for (Index i = j; i < dim; ++i) sigma[static_cast<std::size_t>(i)] = sparse_dot(w[static_cast<std::size_t>(i)], nj);
    const Scalar pivot = sigma[static_cast<std::size_t>(j)];
    const Scalar floor = Scalar(1e-14) * nj.norm() * w[static_cast<std::size_t>(j)].norm();
    if (!(pivot > floor)) throw NotPositiveDefinite(j, static_cast<double>(pivot));
    out.diag_values[static_cast<std::size_t>(j)] = pivot;

    const auto& wj = w[static_cast<std::size_t>(j)];
    for (Index i = j + 1; i < dim; ++i) {
      const Scalar ratio = sigma[static_cast<std::size_t>(i)] / pivot;
      if (std::abs(ratio) > rho) {
        auto& wi = w[static_cast<std::size_t>(i)];
        wi = axpy_drop(wi, -ratio, wj, tau);
      }
    }
  }

  for (Index i = 0; i < dim; ++i) {
    w[static_cast<std::size_t>(i)] *= Scalar(1) / std::sqrt(out.diag_values[static_cast<std::size_t>(i)]);
  }
  out.w = assemble_columns(dim, w);
  return out;
}

/// W^T * inner * W as a lazy composition.
template <typename Scalar>
LinearOperatorT<Scalar> apply_split_preconditioned(const LinearOperatorT<Scalar>& inner,
                                                   const FsaiFactorT<Scalar>& factor) {
  const LinearOperatorT<Scalar> w = wrap(factor.w, "W");
  return chain({transpose(w), inner, w});
}

}  // namespace saddlekit
