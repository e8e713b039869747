#pragma once

// Approximate-nullspace preconditioning of saddle point systems
//
//   [ A    B ] [x]   [f]
//   [ -C^T 0 ] [y] = [g]
//
// wrapped in an outer flexible GMRES. The preconditioner is itself a chain
// of iterative solves: LSQR for the particular solution, CG (symmetric) or
// flexible GMRES with an MRS-solved shifted skew-symmetric preconditioner
// (generalized / general) on the projected system, and LSQR for the
// multiplier.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "saddlekit/fsai.hpp"
#include "saddlekit/krylov.hpp"
#include "saddlekit/nullspace.hpp"

namespace saddlekit {

enum class SaddleCase { Symmetric, Generalized, General };

const char* to_string(SaddleCase c);
SaddleCase parse_case(const std::string& s);

struct SaddleProblem {
  SparseMatrix a;  // n x n
  SparseMatrix b;  // n x m
  SparseMatrix c;  // n x m
  Vector f;        // n
  Vector g;        // m
  SaddleCase kind = SaddleCase::General;
  std::string name;

  Index n() const { return a.rows(); }
  Index m() const { return b.cols(); }

  /// Throws DimensionError / std::invalid_argument on inconsistent blocks or
  /// a case label the blocks do not satisfy.
  void validate() const;
};

/// Symmetric iff B == C and A == A^T exactly; Generalized iff B == C only.
SaddleCase detect_case(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c);

/// [[A, B], [-C^T, 0]] applied blockwise.
LinearOperator saddle_operator(const SaddleProblem& p);
Vector stacked_rhs(const SaddleProblem& p);

/// ||[f; g] - W [x; y]|| / ||[f; g]|| computed from scratch (the absolute
/// residual norm when the right-hand side is zero).
double true_relative_residual(const SaddleProblem& p, const Vector& x, const Vector& y);

struct ToleranceProfile {
  std::string name;
  double tau_saroc = 0;
  double rho_saroc = 0;
  double tau_fsai = 0;
  double rho_fsai = 0;
  double tau_mgs = 0;
  Index w_mgs = 5;
  double eps_in = 1e-5;
  double eps_innermost = 1e-5;

  static ToleranceProfile large();
  static ToleranceProfile mix();
  static ToleranceProfile small();
  /// No dropping or thresholding anywhere; inner solves to `inner_tol`.
  static ToleranceProfile exact(double inner_tol = 1e-12);
  /// "large", "mix", "small" or "exact".
  static ToleranceProfile named(const std::string& name);
};

/// Running sums of inner iteration counts.
struct InnerCounters {
  struct Tally {
    long long iterations = 0;
    long long calls = 0;
    long long max_iter_hits = 0;
    void add(const SolverStats& s) {
      iterations += s.iterations;
      ++calls;
      if (s.status == SolverStatus::MaxIterations) ++max_iter_hits;
    }
    double average() const { return calls ? double(iterations) / double(calls) : 0.0; }
  };
  Tally lsqr_particular, cg, inner_fgmres, mrs, lsqr_recover;

  double average_lsqr() const {
    const long long calls = lsqr_particular.calls + lsqr_recover.calls;
    return calls ? double(lsqr_particular.iterations + lsqr_recover.iterations) / double(calls)
                 : 0.0;
  }
};

struct AssembleOptions {
  bool m_orth = false;
  /// Run a B == C problem through the general path with U := Z.
  bool force_general_path = false;
  /// Diagonal shift added to the projected symmetric part before FSAI.
  double fsai_shift = 0.0;
  double rank_tol = 1e-12;
};

struct NullspacePreconditioner {
  SaddleCase kind = SaddleCase::General;
  bool general_path = false;
  NullspaceBasis z;
  std::optional<NullspaceBasis> u;  // general path only
  SparseMatrix zbar;                // M-orthogonalized Z when m_orth_applied
  FsaiFactor w;
  std::optional<SparseMatrix> a_sym, a_skew;
  StopCriteria inner_stop;
  StopCriteria innermost_stop;
  bool m_orth_applied = false;

  // Operators derived from the above.
  LinearOperator a_op;       // A
  LinearOperator b_op;       // B
  LinearOperator neg_ct;     // -C^T
  LinearOperator left_op;    // Z (or Zbar)
  LinearOperator right_op;   // U on the general path, else left_op
  LinearOperator w_op;       // W
  LinearOperator ns;         // projected symmetric part
  LinearOperator nj;         // projected skew part (empty dims for Symmetric)
  LinearOperator projected;  // W^T Z^T A U W
  LinearOperator skew_split; // W^T Nj W

  const SparseMatrix& left_basis() const { return m_orth_applied ? zbar : z.z; }
  const SparseMatrix& right_basis() const { return general_path ? u->z : left_basis(); }
  Index reduced_dim() const { return left_basis().cols(); }
  Index nnz_total() const;
};

/// B and C have different effective ranks, so Z^T A U is not square.
class BasisMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds bases, optional M-orthogonalization and the FSAI factor. Throws
/// NotPositiveDefinite / NonPositiveNorm / BasisMismatch when the projected operator is not
/// positive definite.
NullspacePreconditioner assemble(const SaddleProblem& problem, const ToleranceProfile& profile,
                                 const AssembleOptions& options = {});

/// Raised from inside a preconditioner application when CG meets a
/// non-positive curvature direction.
class ProjectedBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PreconditionedPair {
  Vector z1;
  Vector z2;
};

/// One application of the nullspace preconditioner to (t1, t2).
PreconditionedPair apply_preconditioner(const NullspacePreconditioner& prec,
                                        const SaddleProblem& problem, const Vector& t1,
                                        const Vector& t2, InnerCounters* counters = nullptr);

enum class SolveStatus {
  Converged,
  MaxIterations,         // ‡
  TrueResidualAboveTol,  // ⋆
  FactorizationFailed,   // †
  ResourceExhausted      // §
};

const char* to_string(SolveStatus s);
/// The table marker for a status ("" for Converged).
const char* marker(SolveStatus s);

struct SolveReport {
  int outer_iterations = 0;
  InnerCounters inner;
  Index nnz_z = 0, nnz_u = 0, nnz_w = 0, nnz_zbar = 0;
  Index effective_rank_b = 0, effective_rank_c = 0;
  double final_true_relative_residual = 0.0;
  double solver_relative_residual = 0.0;
  SolveStatus status = SolveStatus::Converged;
  SaddleCase kind = SaddleCase::General;
  std::vector<double> residual_history;
  std::string message;

  Index nnz_total() const { return nnz_z + nnz_u + nnz_w + nnz_zbar; }
};

struct SolveOptions {
  AssembleOptions assemble;
  StopCriteria outer_stop{1e-5, 1000};
  int restart = 10;
};

struct SaddleSolution {
  Vector x;
  Vector y;
  SolveReport report;
};

SaddleSolution solve(const SaddleProblem& problem, const ToleranceProfile& profile,
                     const SolveOptions& options = {});

/// Unpreconditioned GMRES(restart) on the full saddle operator.
SaddleSolution solve_baseline(const SaddleProblem& problem, const SolveOptions& options = {});

}  // namespace saddlekit
