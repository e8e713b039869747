#include <doctest.h>

#include "oracles.hpp"

using namespace saddlekit;
using oracle::Dense;

namespace {

Dense mat2(double a, double b, double c, double d) {
  Dense m(2, 2);
  m << a, b, c, d;
  return m;
}

bool upper_triangular(const SparseMatrix& w) {
  for (Index j = 0; j < w.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(w, j); it; ++it)
      if (it.row() > j) return false;
  return true;
}

}  // namespace

TEST_CASE("fsai: identity and diagonal") {
  CHECK(oracle::dense(fsai(identity(3), 3, 0, 0).w) == Dense(Dense::Identity(3, 3)));
  const Dense d = mat2(4, 0, 0, 9);
  const FsaiFactor f = fsai(wrap(oracle::sparse(d)), 2, 0, 0);
  CHECK((oracle::dense(f.w) - mat2(0.5, 0, 0, 1.0 / 3.0)).norm() <= 1e-16);
  CHECK(f.diag_values == std::vector<double>{4.0, 9.0});
}

TEST_CASE("fsai: [[2,1],[1,2]] by hand") {
  const Dense n = mat2(2, 1, 1, 2);
  const FsaiFactor f = fsai(wrap(oracle::sparse(n)), 2, 0, 0);
  const Dense expect = mat2(1 / std::sqrt(2.0), -1 / std::sqrt(6.0), 0, 2 / std::sqrt(6.0));
  const Dense w = oracle::dense(f.w);
  CHECK((w - expect).norm() <= 1e-15);
  CHECK(f.diag_values[1] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK((w.transpose() * n * w - Dense::Identity(2, 2)).norm() <= 1e-14);
}

TEST_CASE("fsai: indefinite input raises at the second column") {
  try {
    fsai(wrap(oracle::sparse(mat2(1, 2, 2, 1))), 2, 0, 0);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.column == 1);
    CHECK(e.pivot == doctest::Approx(-3.0));
  }
}

TEST_CASE("fsai: validation") {
  CHECK_THROWS_AS(fsai(identity(3), 2, 0, 0), DimensionError);
  CHECK_THROWS(fsai(identity(2), 2, -1, 0));
}

TEST_CASE("fsai: exact mode equals the inverse Cholesky factor") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Index dim = 5 + static_cast<Index>(s) * 5;
    const SparseMatrix n = oracle::random_spd(dim, 0.1, 4000 + s);
    const Dense nd = oracle::dense(n);
    const FsaiFactor f = fsai(wrap(n), dim, 0, 0);
    const Dense w = oracle::dense(f.w);
    CHECK((w.transpose() * nd * w - Dense::Identity(dim, dim)).norm() <= 1e-8);
    const Dense r = nd.llt().matrixU();
    const Dense rinv = r.triangularView<Eigen::Upper>().solve(Dense::Identity(dim, dim));
    CHECK((w - rinv).norm() <= 1e-8 * rinv.norm());
    for (double p : f.diag_values) CHECK(p > 0.0);
  }
}

TEST_CASE("fsai: W is upper triangular and dropping only removes entries") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index dim = 40;
    const SparseMatrix n = oracle::random_spd(dim, 0.08, 4100 + s);
    const FsaiFactor exact = fsai(wrap(n), dim, 0, 0);
    const FsaiFactor dropped = fsai(wrap(n), dim, 1e-3, 1e-3);
    CHECK(upper_triangular(exact.w));
    CHECK(upper_triangular(dropped.w));
    CHECK(upper_triangular(fsai(wrap(n), dim, 1e-1, 1e-1).w));
    CHECK(dropped.nnz() <= exact.nnz());
  }
}

TEST_CASE("fsai: shift is added to the diagonal") {
  const FsaiFactor f = fsai(wrap(oracle::sparse(mat2(1, 0, 0, 1))), 2, 0, 0, 3.0);
  CHECK(f.diag_values == std::vector<double>{4.0, 4.0});
}

TEST_CASE("apply_split_preconditioned") {
  SUBCASE("W = I leaves the operator unchanged") {
    const SparseMatrix a = oracle::random_sparse(6, 6, 0.5, 7);
    const LinearOperator op = apply_split_preconditioned(wrap(a), fsai(identity(6), 6, 0, 0));
    const Vector x = oracle::random_vector(6, 8);
    CHECK((op(x) - matvec(a, x)).norm() <= 1e-15 * std::max(1.0, x.norm()));
  }
  SUBCASE("exact W on SPD gives the identity") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Index dim = 50;
      const SparseMatrix n = oracle::random_spd(dim, 0.1, 4200 + s);
      const LinearOperator op = apply_split_preconditioned(wrap(n), fsai(wrap(n), dim, 0, 0));
      for (std::uint64_t p = 0; p < 5; ++p) {
        const Vector x = oracle::random_vector(dim, 4300 + p);
        CHECK((op(x) - x).norm() <= 1e-6 * x.norm());
      }
    }
  }
  SUBCASE("diag(4,9) is identity exactly") {
    const SparseMatrix n = oracle::sparse(mat2(4, 0, 0, 9));
    const LinearOperator op = apply_split_preconditioned(wrap(n), fsai(wrap(n), 2, 0, 0));
    CHECK(op(Vector{{1.0, -2.0}}) == Vector{{1.0, -2.0}});
  }
}
