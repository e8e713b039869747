#pragma once

// Dense reference computations and seeded random instances for tests.

#include <random>

#include <Eigen/Dense>

#include "saddlekit/corpus.hpp"

namespace oracle {

using saddlekit::Index;
using saddlekit::SparseMatrix;
using saddlekit::Vector;
using Dense = Eigen::MatrixXd;

inline Dense dense(const SparseMatrix& m) { return Dense(m); }

inline SparseMatrix sparse(const Dense& d) {
  SparseMatrix s = d.sparseView();
  s.makeCompressed();
  return s;
}

inline SparseMatrix random_sparse(Index rows, Index cols, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::vector<Eigen::Triplet<double, Index>> t;
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      if (keep(rng)) t.emplace_back(i, j, val(rng));
  return saddlekit::from_triplets<double>(rows, cols, t);
}

inline Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = val(rng);
  return v;
}

inline Dense random_dense(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Dense d(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) d(i, j) = val(rng);
  return d;
}

/// G G^T + d I with a sparse G.
inline SparseMatrix random_spd(Index n, double density, std::uint64_t seed) {
  const Dense g = dense(random_sparse(n, n, density, seed));
  Dense spd = g * g.transpose() + Dense::Identity(n, n) * (1.0 + 0.1 * double(n) * density);
  spd = Dense(0.5 * (spd + spd.transpose()));
  return sparse(spd);
}

/// Sparse n x m with a guaranteed full column rank: a scaled identity block
/// on rows [0, m) plus random fill.
inline SparseMatrix random_full_rank(Index n, Index m, double density, std::uint64_t seed) {
  Dense d = dense(random_sparse(n, m, density, seed));
  for (Index i = 0; i < m; ++i) d(i, i) += 2.0 + double(m) * density;
  return sparse(d);
}

inline SparseMatrix random_skew(Index n, double density, std::uint64_t seed) {
  const Dense r = dense(random_sparse(n, n, density, seed));
  return sparse(r - r.transpose());
}

inline Vector dense_solve(const Dense& a, const Vector& b) { return a.fullPivLu().solve(b); }

/// Minimum-norm least-squares solution.
inline Vector min_norm_lsq(const Dense& a, const Vector& b) {
  return a.completeOrthogonalDecomposition().solve(b);
}

/// Orthonormal basis of null(M^T) via SVD.
inline Dense nullspace_of_transpose(const Dense& m) {
  Eigen::JacobiSVD<Dense> svd(m.transpose(), Eigen::ComputeFullV);
  const Index rank = svd.rank();
  return svd.matrixV().rightCols(m.rows() - rank);
}

inline Index rank(const Dense& m) {
  Eigen::FullPivLU<Dense> lu(m);
  lu.setThreshold(1e-10);
  return lu.rank();
}

inline Dense saddle_dense(const saddlekit::SaddleProblem& p) {
  const Index n = p.n(), m = p.m();
  Dense w = Dense::Zero(n + m, n + m);
  w.topLeftCorner(n, n) = dense(p.a);
  w.topRightCorner(n, m) = dense(p.b);
  w.bottomLeftCorner(m, n) = -dense(p.c).transpose();
  return w;
}

inline Vector stacked(const Vector& x, const Vector& y) {
  Vector s(x.size() + y.size());
  s << x, y;
  return s;
}

/// Random nonsingular saddle problem of the requested case. A is diagonally
/// shifted so the (1,1) block and the projected block are well conditioned.
inline saddlekit::SaddleProblem random_saddle(saddlekit::SaddleCase kind, Index n, Index m,
                                              std::uint64_t seed) {
  using saddlekit::SaddleCase;
  saddlekit::SaddleBlocks blocks;
  const Dense g = dense(random_sparse(n, n, 0.2, seed));
  Dense a = g * g.transpose() + Dense::Identity(n, n) * 2.0;
  a = Dense(0.5 * (a + a.transpose()));  // blocked products are not bitwise symmetric
  if (kind != SaddleCase::Symmetric) {
    const Dense s = dense(random_sparse(n, n, 0.2, seed + 1));
    a += 0.5 * (s - s.transpose());
  }
  blocks.a = sparse(a);
  blocks.b = random_full_rank(n, m, 0.2, seed + 2);
  if (kind == SaddleCase::General) {
    // C close to B keeps Z^T A U safely positive definite in its symmetric part.
    Dense c = dense(blocks.b) + 0.05 * dense(random_sparse(n, m, 0.1, seed + 3));
    blocks.c = sparse(c);
  } else {
    blocks.c = blocks.b;
  }
  const Vector f = random_vector(n, seed + 4);
  const Vector gg = random_vector(m, seed + 5);
  return saddlekit::make_problem(std::move(blocks), "random", kind, f, gg);
}

}  // namespace oracle
