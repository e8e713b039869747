#include <algorithm>
#include <random>

#include "saddlekit/corpus.hpp"

namespace saddlekit {

SaddleBlocks partition_saddle(const SparseMatrix& w, Index n, Index m) {
  if (w.rows() != w.cols()) throw DimensionError("partition_saddle: matrix is not square");
  if (n < 0 || m < 0 || n + m != w.rows()) {
    throw DimensionError("partition_saddle: order " + std::to_string(w.rows()) + " != n + m = " +
                         std::to_string(n) + " + " + std::to_string(m));
  }
  using T = Eigen::Triplet<double, Index>;
  std::vector<T> ta, tb, tc;
  SaddleBlocks out;
  for (Index j = 0; j < w.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(w, j); it; ++it) {
      const Index i = it.row();
      const double v = it.value();
      if (i < n && j < n) {
        ta.emplace_back(i, j, v);
      } else if (i < n) {
        tb.emplace_back(i, j - n, v);
      } else if (j < n) {
        tc.emplace_back(j, i - n, -v);  // C = -(W[n:, :n])^T
      } else if (v != 0.0) {
        out.discarded_22_block = true;
      }
    }
  }
  out.a = from_triplets<double>(n, n, ta);
  out.b = from_triplets<double>(n, m, tb);
  out.c = from_triplets<double>(n, m, tc);
  return out;
}

SparseMatrix assemble_saddle(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c) {
  const Index n = a.rows();
  const Index m = b.cols();
  using T = Eigen::Triplet<double, Index>;
  std::vector<T> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros() + c.nonZeros()));
  for (Index j = 0; j < n; ++j)
    for (SparseMatrix::InnerIterator it(a, j); it; ++it) t.emplace_back(it.row(), j, it.value());
  for (Index j = 0; j < m; ++j)
    for (SparseMatrix::InnerIterator it(b, j); it; ++it) t.emplace_back(it.row(), n + j, it.value());
  for (Index j = 0; j < m; ++j)
    for (SparseMatrix::InnerIterator it(c, j); it; ++it) t.emplace_back(n + j, it.row(), -it.value());
  return from_triplets<double>(n + m, n + m, t);
}

Index infer_partition(const SparseMatrix& w) {
  const Index order = w.rows();
  Index limit = order;  // m must stay below order - min(i, j) for every entry
  for (Index j = 0; j < w.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(w, j); it; ++it) {
      limit = std::min(limit, order - std::min(it.row(), j));
    }
  }
  if (w.nonZeros() == 0) return order / 2;
  return std::min(limit - 1, order / 2);
}

void RandomSaddleSpec::validate() const {
  // density 0 is accepted: it yields the bare xi-perturbation blocks.
  if (!(density >= 0.0 && density <= 1.0)) {
    throw std::invalid_argument("random spec: density must lie in [0, 1]");
  }
  if (m > n || n < 1 || m < 0) throw std::invalid_argument("random spec: need 0 <= m <= n, n >= 1");
}

std::pair<Vector, Vector> make_rhs(const SparseMatrix& a, const SparseMatrix& b,
                                   const SparseMatrix& c) {
  const Vector ones_n = Vector::Ones(a.cols());
  const Vector ones_m = Vector::Ones(b.cols());
  Vector f = matvec(a, ones_n) + matvec(b, ones_m);
  Vector g = -matvec_transpose(c, ones_n);
  return {std::move(f), std::move(g)};
}

SaddleProblem make_problem(SaddleBlocks blocks, std::string name, std::optional<SaddleCase> kind,
                           std::optional<Vector> f, std::optional<Vector> g) {
  SaddleProblem p;
  p.name = std::move(name);
  p.kind = kind ? *kind : detect_case(blocks.a, blocks.b, blocks.c);
  if (f && g) {
    p.f = std::move(*f);
    p.g = std::move(*g);
  } else {
    auto [ff, gg] = make_rhs(blocks.a, blocks.b, blocks.c);
    p.f = f ? std::move(*f) : std::move(ff);
    p.g = g ? std::move(*g) : std::move(gg);
  }
  p.a = std::move(blocks.a);
  p.b = std::move(blocks.b);
  p.c = std::move(blocks.c);
  p.validate();
  return p;
}

SaddleProblem gen_random_saddle(const RandomSaddleSpec& spec) {
  spec.validate();
  const Index n = spec.n;
  const Index m = spec.m;
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution keep(spec.density);
  std::uniform_real_distribution<double> value(0.0, 1.0);

  using T = Eigen::Triplet<double, Index>;
  auto random_block = [&](Index rows, Index cols, Index diag, std::vector<T>& t) {
    for (Index i = 0; i < diag; ++i) t.emplace_back(i, i, spec.xi);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        if (keep(rng)) t.emplace_back(i, j, value(rng));
      }
    }
  };

  std::vector<T> ta, tb, tct;
  random_block(n, n, n, ta);
  random_block(n, m, m, tb);
  random_block(m, n, m, tct);

  SaddleBlocks blocks;
  blocks.a = from_triplets<double>(n, n, ta);
  blocks.b = from_triplets<double>(n, m, tb);
  const SparseMatrix ct = from_triplets<double>(m, n, tct);
  blocks.c = ct.transpose();
  blocks.c.makeCompressed();

  return make_problem(std::move(blocks),
                      "random(n=" + std::to_string(n) + ",m=" + std::to_string(m) +
                          ",seed=" + std::to_string(spec.seed) + ")",
                      SaddleCase::General);
}

}  // namespace saddlekit
