#include <cstring>

#include <doctest.h>

#include "oracles.hpp"

using namespace saddlekit;
using oracle::Dense;

namespace {

SparseColumn col(std::initializer_list<double> v) {
  SparseColumn c(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) {
    if (x != 0.0) c.insert(i) = x;
    ++i;
  }
  return c;
}

Vector densify(const SparseColumn& c) { return Vector(c); }

}  // namespace

TEST_CASE("matvec: identity and rotation") {
  const SparseMatrix i3 = oracle::sparse(Dense::Identity(3, 3));
  CHECK(matvec(i3, Vector{{1.0, 2.0, 3.0}}) == Vector{{1.0, 2.0, 3.0}});
  Dense r(2, 2);
  r << 0, 1, -1, 0;
  CHECK(matvec(oracle::sparse(r), Vector{{1.0, 0.0}}) == Vector{{0.0, -1.0}});
}

TEST_CASE("matvec: random 10x10 matches dense product") {
  const SparseMatrix a = oracle::random_sparse(10, 10, 0.4, 11);
  const Vector x = oracle::random_vector(10, 12);
  const Vector ref = oracle::dense(a) * x;
  CHECK((matvec(a, x) - ref).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("matvec: dimension mismatch") {
  const SparseMatrix a = oracle::random_sparse(3, 4, 0.5, 1);
  CHECK_THROWS_AS(matvec(a, Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(matvec_transpose(a, Vector::Zero(4)), DimensionError);
}

TEST_CASE("matvec_transpose: identity, column sum, random") {
  CHECK(matvec_transpose(oracle::sparse(Dense::Identity(2, 2)), Vector{{5.0, 7.0}}) == Vector{{5.0, 7.0}});
  Dense ones = Dense::Ones(2, 1);
  CHECK(matvec_transpose(oracle::sparse(ones), Vector{{1.0, 2.0}}) == Vector{{3.0}});
  const SparseMatrix a = oracle::random_sparse(8, 3, 0.6, 5);
  const Vector x = oracle::random_vector(8, 6);
  CHECK((matvec_transpose(a, x) - oracle::dense(a).transpose() * x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("matvec and matvec_transpose are adjoint") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SparseMatrix a = oracle::random_sparse(15, 9, 0.3, 100 + s);
    const Vector x = oracle::random_vector(15, 200 + s);
    const Vector y = oracle::random_vector(9, 300 + s);
    const double lhs = x.dot(matvec(a, y));
    const double rhs = matvec_transpose(a, x).dot(y);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("matvec is deterministic") {
  const SparseMatrix a = oracle::random_sparse(50, 50, 0.2, 7);
  const Vector x = oracle::random_vector(50, 8);
  const Vector y1 = matvec(a, x);
  const Vector y2 = matvec(a, x);
  CHECK(std::memcmp(y1.data(), y2.data(), sizeof(double) * 50) == 0);
}

TEST_CASE("from_triplets sums duplicates and purges zeros") {
  std::vector<Eigen::Triplet<double, Index>> t{{0, 0, 1.0}, {0, 0, 2.0}, {1, 1, 1.0}, {1, 1, -1.0}, {1, 0, 0.0}};
  const SparseMatrix m = from_triplets<double>(2, 2, t);
  CHECK(m.nonZeros() == 1);
  CHECK(m.coeff(0, 0) == 3.0);
}

TEST_CASE("CSC invariants hold after construction") {
  const SparseMatrix m = oracle::random_sparse(30, 20, 0.3, 3);
  REQUIRE(m.isCompressed());
  const auto* outer = m.outerIndexPtr();
  CHECK(outer[0] == 0);
  CHECK(outer[m.cols()] == m.nonZeros());
  for (Index j = 0; j < m.cols(); ++j) {
    CHECK(outer[j] <= outer[j + 1]);
    for (Index k = outer[j] + 1; k < outer[j + 1]; ++k) CHECK(m.innerIndexPtr()[k - 1] < m.innerIndexPtr()[k]);
  }
  for (Index k = 0; k < m.nonZeros(); ++k) CHECK(m.valuePtr()[k] != 0.0);
}

TEST_CASE("axpy_drop: exact cancellation leaves an empty column") {
  const SparseColumn r = axpy_drop(col({1, 0}), -1.0, col({1, 0}), 0.0);
  CHECK(r.nonZeros() == 0);
  CHECK(r.size() == 2);
}

TEST_CASE("axpy_drop: alpha zero keeps the target") {
  const SparseColumn r = axpy_drop(col({1, 1}), 0.0, col({3, -2}), 0.0);
  CHECK(densify(r) == Vector{{1.0, 1.0}});
}

TEST_CASE("axpy_drop: keep rule uses the updated norm") {
  const SparseColumn r = axpy_drop(col({1, 1e-6}), 0.0, col({5, 5}), 1e-3);
  CHECK(r.nonZeros() == 1);
  CHECK(densify(r) == Vector{{1.0, 0.0}});
}

TEST_CASE("axpy_drop: the norm is taken after the update") {
  // target + source = (1, 0.01). Against the pre-update norm of (100, 0.01)
  // the 0.01 entry would be dropped with tau = 1e-3; against the updated
  // norm ~1 it survives.
  const SparseColumn r = axpy_drop(col({100, 0.01}), 1.0, col({-99, 0}), 1e-3);
  CHECK(r.nonZeros() == 2);
}

TEST_CASE("axpy_drop: tau zero is exact sparse addition") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SparseMatrix a = oracle::random_sparse(40, 2, 0.3, 900 + s);
    const SparseColumn t = column(a, 0), u = column(a, 1);
    const SparseColumn r = axpy_drop(t, -0.75, u, 0.0);
    const Vector ref = densify(t) - 0.75 * densify(u);
    CHECK(densify(r) == ref);
    for (SparseColumn::InnerIterator it(r); it; ++it) CHECK(it.value() != 0.0);
  }
}

TEST_CASE("axpy_drop: rejects negative tau and mismatched lengths") {
  CHECK_THROWS(axpy_drop(col({1, 0}), 1.0, col({1, 0}), -1.0));
  CHECK_THROWS_AS(axpy_drop(col({1, 0}), 1.0, col({1, 0, 0}), 0.0), DimensionError);
}

TEST_CASE("symmetric_split: symmetric input has empty skew part") {
  const SparseMatrix a = oracle::random_spd(6, 0.4, 3);
  const auto [s, j] = symmetric_split(a);
  CHECK(identical(s, a));
  CHECK(j.nonZeros() == 0);
}

TEST_CASE("symmetric_split: 2x2 by hand") {
  Dense a(2, 2);
  a << 0, 2, 0, 0;
  const auto [s, j] = symmetric_split(oracle::sparse(a));
  Dense es(2, 2), ej(2, 2);
  es << 0, 1, 1, 0;
  ej << 0, 1, -1, 0;
  CHECK(oracle::dense(s) == es);
  CHECK(oracle::dense(j) == ej);
}

TEST_CASE("symmetric_split: random 20x20 is exactly symmetric and skew") {
  const SparseMatrix a = oracle::random_sparse(20, 20, 0.3, 77);
  const auto [s, j] = symmetric_split(a);
  const Dense ds = oracle::dense(s), dj = oracle::dense(j);
  CHECK((ds - ds.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((dj + dj.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ds + dj - oracle::dense(a)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("symmetric_split: rejects non-square") {
  CHECK_THROWS_AS(symmetric_split(oracle::random_sparse(3, 2, 1.0, 1)), DimensionError);
}

TEST_CASE("identical compares pattern and values") {
  const SparseMatrix a = oracle::random_sparse(5, 5, 0.5, 1);
  SparseMatrix b = a;
  CHECK(identical(a, b));
  REQUIRE(b.nonZeros() > 0);
  b.valuePtr()[0] *= 2.0;
  CHECK_FALSE(identical(a, b));
}
