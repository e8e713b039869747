#include "saddlekit/scheme.hpp"

#include <new>
#include <stdexcept>

namespace saddlekit {

const char* to_string(SaddleCase c) {
  switch (c) {
    case SaddleCase::Symmetric: return "symmetric";
    case SaddleCase::Generalized: return "generalized";
    case SaddleCase::General: return "general";
  }
  return "?";
}

SaddleCase parse_case(const std::string& s) {
  if (s == "symmetric") return SaddleCase::Symmetric;
  if (s == "generalized") return SaddleCase::Generalized;
  if (s == "general") return SaddleCase::General;
  throw std::invalid_argument("unknown case '" + s + "'");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::TrueResidualAboveTol: return "TrueResidualAboveTol";
    case SolveStatus::FactorizationFailed: return "FactorizationFailed";
    case SolveStatus::ResourceExhausted: return "ResourceExhausted";
  }
  return "?";
}

const char* marker(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "";
    case SolveStatus::MaxIterations: return "‡";
    case SolveStatus::TrueResidualAboveTol: return "⋆";
    case SolveStatus::FactorizationFailed: return "†";
    case SolveStatus::ResourceExhausted: return "§";
  }
  return "?";
}

void SaddleProblem::validate() const {
  const Index nn = a.rows();
  if (a.cols() != nn) throw DimensionError("saddle problem: A is not square");
  if (b.rows() != nn || c.rows() != nn) throw DimensionError("saddle problem: B/C row count != n");
  if (b.cols() != c.cols()) throw DimensionError("saddle problem: B and C differ in width");
  if (b.cols() > nn) throw DimensionError("saddle problem: m > n");
  if (f.size() != nn) throw DimensionError("saddle problem: f has wrong length");
  if (g.size() != b.cols()) throw DimensionError("saddle problem: g has wrong length");
  if (kind != SaddleCase::General && !identical(b, c)) {
    throw std::invalid_argument(std::string("saddle problem: case ") + to_string(kind) +
                                " requires B == C");
  }
  if (kind == SaddleCase::Symmetric && !identical(a, SparseMatrix(a.transpose()))) {
    throw std::invalid_argument("saddle problem: case symmetric requires A == A^T");
  }
}

SaddleCase detect_case(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c) {
  if (!identical(b, c)) return SaddleCase::General;
  if (identical(a, SparseMatrix(a.transpose()))) return SaddleCase::Symmetric;
  return SaddleCase::Generalized;
}

LinearOperator saddle_operator(const SaddleProblem& p) {
  auto a = std::make_shared<const SparseMatrix>(p.a);
  auto b = std::make_shared<const SparseMatrix>(p.b);
  auto c = std::make_shared<const SparseMatrix>(p.c);
  const Index n = p.n();
  const Index m = p.m();
  auto apply = [a, b, c, n, m](const Vector& v) {
    Vector out(n + m);
    out.head(n) = matvec(*a, v.head(n)) + matvec(*b, v.tail(m));
    out.tail(m) = -matvec_transpose(*c, v.head(n));
    return out;
  };
  auto apply_t = [a, b, c, n, m](const Vector& v) {
    Vector out(n + m);
    out.head(n) = matvec_transpose(*a, v.head(n)) - matvec(*c, v.tail(m));
    out.tail(m) = matvec_transpose(*b, v.head(n));
    return out;
  };
  return LinearOperator(n + m, n + m, apply, apply_t, "[[A,B],[-C^T,0]]");
}

Vector stacked_rhs(const SaddleProblem& p) {
  Vector rhs(p.n() + p.m());
  rhs << p.f, p.g;
  return rhs;
}

double true_relative_residual(const SaddleProblem& p, const Vector& x, const Vector& y) {
  Vector r(p.n() + p.m());
  r.head(p.n()) = p.f - matvec(p.a, x) - matvec(p.b, y);
  r.tail(p.m()) = p.g + matvec_transpose(p.c, x);
  const double rhs_norm = std::sqrt(p.f.squaredNorm() + p.g.squaredNorm());
  return rhs_norm > 0 ? r.norm() / rhs_norm : r.norm();
}

ToleranceProfile ToleranceProfile::large() {
  return {"large", 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 5, 1e-3, 1e-3};
}

ToleranceProfile ToleranceProfile::mix() {
  return {"mix", 1e-2, 1e-2, 1e-3, 1e-3, 1e-2, 5, 1e-4, 1e-5};
}

ToleranceProfile ToleranceProfile::small() {
  return {"small", 1e-5, 1e-5, 1e-5, 1e-5, 1e-5, 15, 1e-5, 1e-5};
}

ToleranceProfile ToleranceProfile::exact(double inner_tol) {
  return {"exact", 0, 0, 0, 0, 0, 1 << 20, inner_tol, inner_tol};
}

ToleranceProfile ToleranceProfile::named(const std::string& name) {
  if (name == "large") return large();
  if (name == "mix") return mix();
  if (name == "small") return small();
  if (name == "exact") return exact();
  throw std::invalid_argument("unknown tolerance profile '" + name + "'");
}

Index NullspacePreconditioner::nnz_total() const {
  Index total = z.nnz() + w.nnz();
  if (general_path && u) total += u->nnz();
  if (m_orth_applied) total += zbar.nonZeros();
  return total;
}

NullspacePreconditioner assemble(const SaddleProblem& problem, const ToleranceProfile& profile,
                                 const AssembleOptions& options) {
  problem.validate();
  NullspacePreconditioner prec;
  prec.kind = problem.kind;
  prec.general_path = problem.kind == SaddleCase::General || options.force_general_path;
  prec.inner_stop = {profile.eps_in, 1000};
  prec.innermost_stop = {profile.eps_innermost, 1000};

  prec.z = saroc(problem.b, profile.rho_saroc, profile.tau_saroc, options.rank_tol);
  if (prec.general_path) {
    prec.u = problem.kind == SaddleCase::General
                 ? saroc(problem.c, profile.rho_saroc, profile.tau_saroc, options.rank_tol)
                 : prec.z;
    if (prec.u->z.cols() != prec.z.z.cols()) {
      throw BasisMismatch("assemble: nullspace bases of B^T and C^T differ in size (" +
                                  std::to_string(prec.z.z.cols()) + " vs " +
                                  std::to_string(prec.u->z.cols()) + ")");
    }
  }

  prec.a_op = wrap(problem.a, "A");
  prec.b_op = wrap(problem.b, "B");
  prec.neg_ct = scale(-1.0, transpose(wrap(problem.c, "C")));

  if (problem.kind == SaddleCase::Generalized) {
    auto [s, j] = symmetric_split(problem.a);
    prec.a_sym = std::move(s);
    prec.a_skew = std::move(j);
  }

  if (options.m_orth && !prec.general_path) {
    const LinearOperator m =
        problem.kind == SaddleCase::Symmetric ? prec.a_op : wrap(*prec.a_sym, "A_s");
    prec.zbar = mgs_m_orth(prec.z.z, m, OrthoParams{profile.w_mgs, profile.tau_mgs});
    prec.m_orth_applied = true;
  }

  prec.left_op = wrap(prec.left_basis(), "Z");
  prec.right_op = prec.general_path ? wrap(prec.u->z, "U") : prec.left_op;
  const LinearOperator zt = transpose(prec.left_op);
  const LinearOperator reduced = chain({zt, prec.a_op, prec.right_op});  // Z^T A U

  const Index dim = prec.reduced_dim();
  if (prec.general_path) {
    const LinearOperator reduced_t = transpose(reduced);  // U^T A^T Z
    prec.ns = scale(0.5, reduced + reduced_t);
    prec.nj = scale(0.5, reduced - reduced_t);
  } else if (problem.kind == SaddleCase::Symmetric) {
    prec.ns = reduced;
    prec.nj = LinearOperator(dim, dim, [](const Vector& x) { return Vector(Vector::Zero(x.size())); },
                             [](const Vector& x) { return Vector(Vector::Zero(x.size())); }, "0");
  } else {
    prec.ns = chain({zt, wrap(*prec.a_sym, "A_s"), prec.left_op});
    prec.nj = chain({zt, wrap(*prec.a_skew, "A_j"), prec.left_op});
  }

  prec.w = fsai(prec.ns, dim, profile.rho_fsai, profile.tau_fsai, options.fsai_shift);
  prec.w_op = wrap(prec.w.w, "W");
  prec.projected = apply_split_preconditioned(reduced, prec.w);
  prec.skew_split = apply_split_preconditioned(prec.nj, prec.w);
  return prec;
}

PreconditionedPair apply_preconditioner(const NullspacePreconditioner& prec,
                                        const SaddleProblem& problem, const Vector& t1,
                                        const Vector& t2, InnerCounters* counters) {
  InnerCounters scratch;
  InnerCounters& cnt = counters ? *counters : scratch;

  // Particular solution of -C^T z = t2.
  const SolveResult particular = lsqr(prec.neg_ct, t2, prec.inner_stop);
  cnt.lsqr_particular.add(particular.stats);
  const Vector& z1_hat = particular.x;

  // Projected solve for u_hat = W^{-1} u.
  Vector z1 = z1_hat;
  if (prec.reduced_dim() > 0) {
    const Vector rhs = prec.w_op.apply_transpose(
        prec.left_op.apply_transpose(t1 - prec.a_op.apply(z1_hat)));
    Vector u_hat;
    if (!prec.general_path && problem.kind == SaddleCase::Symmetric) {
      const SolveResult r = cg(prec.projected, rhs, prec.inner_stop);
      cnt.cg.add(r.stats);
      if (r.stats.status == SolverStatus::Breakdown) {
        throw ProjectedBreakdown("CG met non-positive curvature on the projected operator");
      }
      u_hat = r.x;
    } else {
      const Preconditioner shifted_skew = [&prec, &cnt](const Vector& t) {
        const SolveResult s = mrs(prec.skew_split, t, prec.innermost_stop);
        cnt.mrs.add(s.stats);
        return s.x;
      };
      const SolveResult r = fgmres(prec.projected, rhs, shifted_skew, 10, prec.inner_stop);
      cnt.inner_fgmres.add(r.stats);
      u_hat = r.x;
    }
    z1 += prec.right_op.apply(prec.w_op.apply(u_hat));
  }

  // Multiplier from B z2 = t1 - A z1.
  const SolveResult mult = lsqr(prec.b_op, Vector(t1 - prec.a_op.apply(z1)), prec.inner_stop);
  cnt.lsqr_recover.add(mult.stats);
  return {std::move(z1), mult.x};
}

namespace {

void fill_basis_counts(SolveReport& rep, const NullspacePreconditioner& prec) {
  rep.nnz_z = prec.z.nnz();
  rep.nnz_u = prec.general_path && prec.u ? prec.u->nnz() : 0;
  rep.nnz_w = prec.w.nnz();
  rep.nnz_zbar = prec.m_orth_applied ? prec.zbar.nonZeros() : 0;
  rep.effective_rank_b = prec.z.effective_rank;
  rep.effective_rank_c = prec.u ? prec.u->effective_rank : prec.z.effective_rank;
}

SaddleSolution failed(const SaddleProblem& problem, SolveStatus status, std::string message) {
  SaddleSolution out;
  out.x = Vector::Zero(problem.n());
  out.y = Vector::Zero(problem.m());
  out.report.kind = problem.kind;
  out.report.status = status;
  out.report.message = std::move(message);
  out.report.final_true_relative_residual = true_relative_residual(problem, out.x, out.y);
  out.report.solver_relative_residual = out.report.final_true_relative_residual;
  out.report.residual_history = {out.report.final_true_relative_residual};
  return out;
}

SolveStatus classify(SolverStatus solver, double true_res, double tol) {
  switch (solver) {
    case SolverStatus::Converged:
      return true_res <= tol ? SolveStatus::Converged : SolveStatus::TrueResidualAboveTol;
    case SolverStatus::MaxIterations:
      return SolveStatus::MaxIterations;
    case SolverStatus::Breakdown:
      return true_res <= tol ? SolveStatus::Converged : SolveStatus::TrueResidualAboveTol;
  }
  return SolveStatus::TrueResidualAboveTol;
}

}  // namespace

SaddleSolution solve(const SaddleProblem& problem, const ToleranceProfile& profile,
                     const SolveOptions& options) {
  NullspacePreconditioner prec;
  try {
    prec = assemble(problem, profile, options.assemble);
  } catch (const NotPositiveDefinite& e) {
    return failed(problem, SolveStatus::FactorizationFailed, e.what());
  } catch (const NonPositiveNorm& e) {
    return failed(problem, SolveStatus::FactorizationFailed, e.what());
  } catch (const BasisMismatch& e) {
    return failed(problem, SolveStatus::FactorizationFailed, e.what());
  } catch (const std::bad_alloc&) {
    return failed(problem, SolveStatus::ResourceExhausted, "allocation failed during assembly");
  }

  SaddleSolution out;
  SolveReport& rep = out.report;
  rep.kind = problem.kind;
  fill_basis_counts(rep, prec);

  const Index n = problem.n();
  const Index m = problem.m();
  const Preconditioner outer_prec = [&](const Vector& t) {
    PreconditionedPair zz = apply_preconditioner(prec, problem, t.head(n), t.tail(m), &rep.inner);
    Vector z(n + m);
    z << zz.z1, zz.z2;
    return z;
  };

  SolveResult res;
  try {
    res = fgmres(saddle_operator(problem), stacked_rhs(problem), outer_prec, options.restart,
                 options.outer_stop);
  } catch (const ProjectedBreakdown& e) {
    SaddleSolution f = failed(problem, SolveStatus::FactorizationFailed, e.what());
    f.report.inner = rep.inner;
    fill_basis_counts(f.report, prec);
    return f;
  } catch (const std::bad_alloc&) {
    SaddleSolution f = failed(problem, SolveStatus::ResourceExhausted, "allocation failed");
    fill_basis_counts(f.report, prec);
    return f;
  }

  out.x = res.x.head(n);
  out.y = res.x.tail(m);
  rep.outer_iterations = res.stats.iterations;
  rep.residual_history = res.stats.residual_history;
  rep.solver_relative_residual = res.stats.final_relative_residual;
  rep.final_true_relative_residual = true_relative_residual(problem, out.x, out.y);
  rep.status = classify(res.stats.status, rep.final_true_relative_residual,
                        options.outer_stop.rel_tol);
  if (res.stats.status == SolverStatus::Breakdown) rep.message = "outer flexible GMRES breakdown";
  if (prec.z.effective_rank < m) {
    rep.message += (rep.message.empty() ? "" : "; ") + std::string("B rank-deficient: k = ") +
                   std::to_string(prec.z.effective_rank);
  }
  return out;
}

SaddleSolution solve_baseline(const SaddleProblem& problem, const SolveOptions& options) {
  problem.validate();
  SaddleSolution out;
  const SolveResult res = gmres(saddle_operator(problem), stacked_rhs(problem), options.restart,
                                options.outer_stop);
  out.x = res.x.head(problem.n());
  out.y = res.x.tail(problem.m());
  SolveReport& rep = out.report;
  rep.kind = problem.kind;
  rep.outer_iterations = res.stats.iterations;
  rep.residual_history = res.stats.residual_history;
  rep.solver_relative_residual = res.stats.final_relative_residual;
  rep.final_true_relative_residual = true_relative_residual(problem, out.x, out.y);
  rep.status = classify(res.stats.status, rep.final_true_relative_residual,
                        options.outer_stop.rel_tol);
  return out;
}

}  // namespace saddlekit
