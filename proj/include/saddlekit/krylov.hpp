#pragma once

// Krylov solvers used by the nested schemes: restarted GMRES / flexible
// GMRES, CG, LSQR and a minimal residual solver for shifted skew-symmetric
// systems. Every solver starts from the zero vector.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "saddlekit/operator.hpp"

namespace saddlekit {

struct StopCriteria {
  double rel_tol = 1e-5;
  int max_iters = 1000;

  void validate() const {
    if (!(rel_tol > 0)) throw std::invalid_argument("StopCriteria: rel_tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("StopCriteria: max_iters must be >= 1");
  }
};

enum class SolverStatus { Converged, MaxIterations, Breakdown };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "Converged";
    case SolverStatus::MaxIterations: return "MaxIterations";
    case SolverStatus::Breakdown: return "Breakdown";
  }
  return "?";
}

struct SolverStats {
  int iterations = 0;
  std::vector<double> residual_history;  // relative, includes the initial residual
  SolverStatus status = SolverStatus::Converged;
  double final_relative_residual = 0.0;
};

template <typename Scalar>
struct SolveResultT {
  VectorT<Scalar> x;
  SolverStats stats;
};

/// Right preconditioner: approximately solves M z = t. May differ per call.
template <typename Scalar>
using PreconditionerT = std::function<VectorT<Scalar>(const VectorT<Scalar>&)>;

using Preconditioner = PreconditionerT<double>;
using SolveResult = SolveResultT<double>;

namespace detail {

template <typename Scalar>
void givens(Scalar a, Scalar b, Scalar& c, Scalar& s, Scalar& r) {
  if (b == Scalar(0)) {
    c = Scalar(1);
    s = Scalar(0);
    r = a;
    return;
  }
  r = std::hypot(a, b);
  c = a / r;
  s = b / r;
}

template <typename Scalar>
void rotate(Scalar c, Scalar s, Scalar& x, Scalar& y) {
  const Scalar t = c * x + s * y;
  y = -s * x + c * y;
  x = t;
}

template <typename Scalar>
SolveResultT<Scalar> trivial_zero(Index n) {
  SolveResultT<Scalar> out;
  out.x = VectorT<Scalar>::Zero(n);
  out.stats.residual_history = {0.0};
  out.stats.final_relative_residual = 0.0;
  out.stats.status = SolverStatus::Converged;
  return out;
}

inline void finish(SolverStats& st, double final_rel) {
  st.final_relative_residual = final_rel;
  st.residual_history.back() = final_rel;
}

// Shared restarted Arnoldi driver. With a preconditioner the preconditioned
// basis is stored (flexible variant); without, it reduces to plain GMRES.
template <typename Scalar>
SolveResultT<Scalar> arnoldi_solve(const LinearOperatorT<Scalar>& op, const VectorT<Scalar>& b,
                                   const PreconditionerT<Scalar>* precond, int restart,
                                   const StopCriteria& stop) {
  using Vec = VectorT<Scalar>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  stop.validate();
  if (op.rows() != op.cols()) throw DimensionError("gmres: operator must be square");
  require(b.size() == op.rows(), "gmres: right-hand side length", b.size(), op.rows());
  if (restart < 1) throw std::invalid_argument("gmres: restart must be >= 1");

  const Index n = b.size();
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) return trivial_zero<Scalar>(n);

  const int m = restart;
  SolveResultT<Scalar> out;
  out.x = Vec::Zero(n);
  SolverStats& st = out.stats;

  Vec r = b;
  Scalar beta = bnorm;
  st.residual_history.push_back(1.0);

  std::vector<Vec> basis(static_cast<std::size_t>(m) + 1);
  std::vector<Vec> zbasis(precond ? static_cast<std::size_t>(m) : 0);
  Mat h(m + 1, m);
  Vec cs(m), sn(m), g(m + 1);

  bool broke_down = false;
  for (;;) {
    const double rel = static_cast<double>(beta / bnorm);
    if (rel <= stop.rel_tol) {
      st.status = SolverStatus::Converged;
      finish(st, rel);
      break;
    }
    if (broke_down) {
      st.status = SolverStatus::Breakdown;
      finish(st, rel);
      break;
    }
    if (st.iterations >= stop.max_iters) {
      st.status = SolverStatus::MaxIterations;
      finish(st, rel);
      break;
    }

    h.setZero();
    g.setZero();
    g(0) = beta;
    basis[0] = r / beta;
    int k = 0;
    for (int j = 0; j < m && st.iterations < stop.max_iters; ++j) {
      Vec w;
      if (precond) {
        zbasis[static_cast<std::size_t>(j)] = (*precond)(basis[static_cast<std::size_t>(j)]);
        w = op.apply(zbasis[static_cast<std::size_t>(j)]);
      } else {
        w = op.apply(basis[static_cast<std::size_t>(j)]);
      }
      const Scalar wnorm0 = w.norm();
      for (int i = 0; i <= j; ++i) {
        const Scalar hij = basis[static_cast<std::size_t>(i)].dot(w);
        h(i, j) = hij;
        w -= hij * basis[static_cast<std::size_t>(i)];
      }
      // One reorthogonalization pass if the new vector still leans on the basis.
      Scalar wn = w.norm();
      if (wn > Scalar(0)) {
        Scalar lean(0);
        for (int i = 0; i <= j; ++i) {
          lean = std::max(lean, std::abs(basis[static_cast<std::size_t>(i)].dot(w)) / wn);
        }
        if (lean > Scalar(1e-8)) {
          for (int i = 0; i <= j; ++i) {
            const Scalar corr = basis[static_cast<std::size_t>(i)].dot(w);
            h(i, j) += corr;
            w -= corr * basis[static_cast<std::size_t>(i)];
          }
          wn = w.norm();
        }
      }
      h(j + 1, j) = wn;

      for (int i = 0; i < j; ++i) rotate(cs(i), sn(i), h(i, j), h(i + 1, j));
      Scalar rjj;
      givens(h(j, j), h(j + 1, j), cs(j), sn(j), rjj);
      h(j, j) = rjj;
      h(j + 1, j) = Scalar(0);
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);

      ++st.iterations;
      k = j + 1;
      st.residual_history.push_back(static_cast<double>(std::abs(g(j + 1)) / bnorm));

      const Scalar scale_ref = std::max(wnorm0, std::numeric_limits<Scalar>::min());
      if (wn <= std::numeric_limits<Scalar>::epsilon() * scale_ref) {
        broke_down = true;
        break;
      }
      basis[static_cast<std::size_t>(j) + 1] = w / wn;
      if (std::abs(g(j + 1)) / bnorm <= stop.rel_tol) break;
    }

    // Drop trailing columns with a vanishing diagonal (singular projection).
    int used = k;
    while (used > 0 && std::abs(h(used - 1, used - 1)) == Scalar(0)) --used;
    if (used > 0) {
      const Vec y = h.topLeftCorner(used, used).template triangularView<Eigen::Upper>().solve(
          g.head(used));
      for (int i = 0; i < used; ++i) {
        out.x += y(i) * (precond ? zbasis[static_cast<std::size_t>(i)]
                                 : basis[static_cast<std::size_t>(i)]);
      }
    }
    r = b - op.apply(out.x);
    beta = r.norm();
  }
  return out;
}

}  // namespace detail

/// Restarted GMRES(m), unpreconditioned.
template <typename Scalar>
SolveResultT<Scalar> gmres(const LinearOperatorT<Scalar>& op, const std::type_identity_t<VectorT<Scalar>>& b,
                           int restart = 10, const StopCriteria& stop = {}) {
  return detail::arnoldi_solve<Scalar>(op, b, nullptr, restart, stop);
}

/// Restarted right-preconditioned flexible GMRES(m). The reported final
/// residual is recomputed from b - op * x.
template <typename Scalar>
SolveResultT<Scalar> fgmres(const LinearOperatorT<Scalar>& op, const std::type_identity_t<VectorT<Scalar>>& b,
                            const PreconditionerT<Scalar>& precond, int restart = 10,
                            const StopCriteria& stop = {}) {
  return detail::arnoldi_solve<Scalar>(op, b, &precond, restart, stop);
}

/// Conjugate gradients. Reports Breakdown as soon as p^T A p <= 0.
template <typename Scalar>
SolveResultT<Scalar> cg(const LinearOperatorT<Scalar>& op, const std::type_identity_t<VectorT<Scalar>>& b,
                        const StopCriteria& stop = {}) {
  using Vec = VectorT<Scalar>;
  stop.validate();
  if (op.rows() != op.cols()) throw DimensionError("cg: operator must be square");
  detail::require(b.size() == op.rows(), "cg: right-hand side length", b.size(), op.rows());
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) return detail::trivial_zero<Scalar>(b.size());

  SolveResultT<Scalar> out;
  out.x = Vec::Zero(b.size());
  SolverStats& st = out.stats;
  Vec r = b;
  Vec p = r;
  Scalar rr = r.squaredNorm();
  st.residual_history.push_back(1.0);
  for (;;) {
    const double rel = static_cast<double>(std::sqrt(rr) / bnorm);
    if (rel <= stop.rel_tol) {
      st.status = SolverStatus::Converged;
      break;
    }
    if (st.iterations >= stop.max_iters) {
      st.status = SolverStatus::MaxIterations;
      break;
    }
    const Vec q = op.apply(p);
    const Scalar pq = p.dot(q);
    if (!(pq > Scalar(0))) {
      st.status = SolverStatus::Breakdown;
      break;
    }
    const Scalar alpha = rr / pq;
    out.x += alpha * p;
    r -= alpha * q;
    const Scalar rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++st.iterations;
    st.residual_history.push_back(static_cast<double>(std::sqrt(rr) / bnorm));
  }
  st.final_relative_residual = st.residual_history.back();
  return out;
}

/// LSQR (no damping). Stops on ||r||/||b|| <= tol, or on the normal-equation
/// test ||op^T r|| / (||op|| ||r||) <= tol for inconsistent systems.
template <typename Scalar>
SolveResultT<Scalar> lsqr(const LinearOperatorT<Scalar>& op, const std::type_identity_t<VectorT<Scalar>>& b,
                          const StopCriteria& stop = {}) {
  using Vec = VectorT<Scalar>;
  stop.validate();
  detail::require(b.size() == op.rows(), "lsqr: right-hand side length", b.size(), op.rows());
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) return detail::trivial_zero<Scalar>(op.cols());

  SolveResultT<Scalar> out;
  out.x = Vec::Zero(op.cols());
  SolverStats& st = out.stats;
  st.residual_history.push_back(1.0);

  Scalar beta = bnorm;
  Vec u = b / beta;
  Vec v = op.apply_transpose(u);
  Scalar alpha = v.norm();
  if (alpha == Scalar(0)) {
    // b is orthogonal to the range: x = 0 is already the least-squares solution.
    st.status = SolverStatus::Converged;
    st.final_relative_residual = 1.0;
    return out;
  }
  v /= alpha;
  Vec w = v;
  Scalar phibar = beta;
  Scalar rhobar = alpha;
  Scalar anorm2(0);

  for (;;) {
    if (st.iterations >= stop.max_iters) {
      st.status = SolverStatus::MaxIterations;
      break;
    }
    u = op.apply(v) - alpha * u;
    beta = u.norm();
    if (beta > Scalar(0)) u /= beta;
    anorm2 += alpha * alpha + beta * beta;
    v = op.apply_transpose(u) - beta * v;
    alpha = v.norm();
    if (alpha > Scalar(0)) v /= alpha;

    Scalar c, s, rho;
    detail::givens(rhobar, beta, c, s, rho);
    if (rho == Scalar(0)) {
      st.status = SolverStatus::Breakdown;
      break;
    }
    const Scalar theta = s * alpha;
    rhobar = -c * alpha;
    const Scalar phi = c * phibar;
    phibar = s * phibar;
    out.x += (phi / rho) * w;
    w = v - (theta / rho) * w;
    ++st.iterations;

    const Scalar rnorm = std::abs(phibar);
    const Scalar arnorm = std::abs(phibar * alpha * c);
    st.residual_history.push_back(static_cast<double>(rnorm / bnorm));
    const bool consistent_ok = rnorm / bnorm <= stop.rel_tol;
    const bool normal_ok =
        rnorm > Scalar(0) && arnorm / (std::sqrt(anorm2) * rnorm) <= stop.rel_tol;
    if (consistent_ok || normal_ok) {
      st.status = SolverStatus::Converged;
      break;
    }
    if (beta == Scalar(0) || alpha == Scalar(0)) {
      st.status = SolverStatus::Breakdown;
      break;
    }
  }
  st.final_relative_residual = st.residual_history.back();
  return out;
}

/// Minimal residual solver for (I + J) x = b with J skew-symmetric.
/// Skew-Lanczos gives J V_k = V_{k+1} T_k with T_k tridiagonal and zero
/// diagonal; the projected least-squares problem is updated by plane
/// rotations and the iterate by three-term direction recurrences.
template <typename Scalar>
SolveResultT<Scalar> mrs(const LinearOperatorT<Scalar>& skew, const std::type_identity_t<VectorT<Scalar>>& b,
                         const StopCriteria& stop = {}) {
  using Vec = VectorT<Scalar>;
  stop.validate();
  if (skew.rows() != skew.cols()) throw DimensionError("mrs: operator must be square");
  detail::require(b.size() == skew.rows(), "mrs: right-hand side length", b.size(), skew.rows());
  const Index n = b.size();
  const Scalar bnorm = b.norm();
  if (bnorm == Scalar(0)) return detail::trivial_zero<Scalar>(n);

  SolveResultT<Scalar> out;
  out.x = Vec::Zero(n);
  SolverStats& st = out.stats;
  st.residual_history.push_back(1.0);

  Vec v_prev = Vec::Zero(n);
  Vec v = b / bnorm;
  Scalar beta(0);  // coupling between v_prev and v
  Scalar gbar = bnorm;
  // Rotations from the two previous steps and the previous two directions.
  Scalar c1(1), s1(0), c2(1), s2(0);
  Vec p1 = Vec::Zero(n), p2 = Vec::Zero(n);

  for (;;) {
    const double rel = static_cast<double>(std::abs(gbar) / bnorm);
    if (rel <= stop.rel_tol) {
      st.status = SolverStatus::Converged;
      break;
    }
    if (st.iterations >= stop.max_iters) {
      st.status = SolverStatus::MaxIterations;
      break;
    }
    Vec w = skew.apply(v);
#ifndef NDEBUG
    if (std::abs(v.dot(w)) > Scalar(1e-10) * w.norm()) {
      throw std::invalid_argument("mrs: operator is not skew-symmetric");
    }
#endif
    w += beta * v_prev;
    const Scalar beta_next = w.norm();

    // Column k of I + T: (-beta at row k-1, 1 at row k, beta_next at row k+1).
    Scalar r_km2(0), r_km1 = -beta, r_kk(1);
    detail::rotate(c2, s2, r_km2, r_km1);
    detail::rotate(c1, s1, r_km1, r_kk);
    Scalar c, s, rho;
    detail::givens(r_kk, beta_next, c, s, rho);

    const Scalar gamma = c * gbar;
    gbar = -s * gbar;
    Vec p = (v - r_km1 * p1 - r_km2 * p2) / rho;
    out.x += gamma * p;
    p2 = std::move(p1);
    p1 = std::move(p);
    c2 = c1;
    s2 = s1;
    c1 = c;
    s1 = s;
    ++st.iterations;
    st.residual_history.push_back(static_cast<double>(std::abs(gbar) / bnorm));

    if (beta_next == Scalar(0)) {
      // Invariant subspace reached; the iterate is exact.
      st.status = SolverStatus::Converged;
      break;
    }
    v_prev = std::move(v);
    v = w / beta_next;
    beta = beta_next;
  }
  st.final_relative_residual = st.residual_history.back();
  return out;
}

}  // namespace saddlekit
