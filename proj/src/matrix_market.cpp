#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "saddlekit/corpus.hpp"

namespace saddlekit {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

struct Reader {
  std::ifstream in;
  std::string source;
  std::size_t line_no = 0;

  explicit Reader(const std::filesystem::path& path) : in(path), source(path.string()) {
    if (!in) throw ParseError(source, 0, "cannot open file");
  }

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source, line_no, what); }
};

MatrixMarketHeader parse_header(Reader& rd) {
  std::string line;
  if (!rd.next(line)) rd.fail("empty file");
  std::istringstream banner(line);
  std::string tag, object;
  MatrixMarketHeader h;
  banner >> tag >> object >> h.format >> h.field >> h.symmetry;
  if (tag != "%%MatrixMarket") rd.fail("missing %%MatrixMarket banner");
  object = lower(object);
  h.format = lower(h.format);
  h.field = lower(h.field);
  h.symmetry = lower(h.symmetry);
  if (object != "matrix") rd.fail("unsupported object '" + object + "'");
  if (h.format != "coordinate" && h.format != "array") rd.fail("unsupported format '" + h.format + "'");
  if (h.field != "real") rd.fail("unsupported field '" + h.field + "' (only real)");
  if (h.symmetry != "general" && h.symmetry != "symmetric" && h.symmetry != "skew-symmetric") {
    rd.fail("unsupported symmetry '" + h.symmetry + "'");
  }

  while (rd.next(line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '%') continue;
    std::istringstream size(line);
    if (h.format == "coordinate") {
      if (!(size >> h.rows >> h.cols >> h.entries)) rd.fail("malformed size line");
    } else {
      if (!(size >> h.rows >> h.cols)) rd.fail("malformed size line");
      h.entries = h.rows * h.cols;
    }
    if (h.rows < 0 || h.cols < 0 || h.entries < 0) rd.fail("negative size");
    return h;
  }
  rd.fail("missing size line");
}

bool data_line(Reader& rd, std::string& line) {
  while (rd.next(line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '%') continue;
    return true;
  }
  return false;
}

std::vector<Eigen::Triplet<double, Index>> read_coordinate(Reader& rd, const MatrixMarketHeader& h) {
  std::vector<Eigen::Triplet<double, Index>> t;
  t.reserve(static_cast<std::size_t>(h.entries) * (h.symmetry == "general" ? 1 : 2));
  std::string line;
  for (Index k = 0; k < h.entries; ++k) {
    if (!data_line(rd, line)) rd.fail("expected " + std::to_string(h.entries) + " entries, got " + std::to_string(k));
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double v = 0;
    if (!(ls >> i >> j >> v)) rd.fail("malformed entry");
    if (i < 1 || i > h.rows || j < 1 || j > h.cols) {
      rd.fail("index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of bounds");
    }
    const Index r = static_cast<Index>(i - 1);
    const Index c = static_cast<Index>(j - 1);
    t.emplace_back(r, c, v);
    if (r != c) {
      if (h.symmetry == "symmetric") t.emplace_back(c, r, v);
      if (h.symmetry == "skew-symmetric") t.emplace_back(c, r, -v);
    } else if (h.symmetry == "skew-symmetric" && v != 0.0) {
      rd.fail("nonzero diagonal in skew-symmetric file");
    }
  }
  return t;
}

std::vector<double> read_array(Reader& rd, const MatrixMarketHeader& h) {
  if (h.symmetry != "general") rd.fail("only general array storage is supported");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(h.entries));
  std::string line;
  while (static_cast<Index>(vals.size()) < h.entries) {
    if (!data_line(rd, line)) rd.fail("array ended early");
    std::istringstream ls(line);
    double v = 0;
    if (!(ls >> v)) rd.fail("malformed array value");
    vals.push_back(v);
  }
  return vals;
}

void write_banner(std::ofstream& out, const std::filesystem::path& path) {
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
}

}  // namespace

MatrixMarketHeader read_matrix_market_header(const std::filesystem::path& path) {
  Reader rd(path);
  return parse_header(rd);
}

SparseMatrix read_matrix_market(const std::filesystem::path& path) {
  Reader rd(path);
  const MatrixMarketHeader h = parse_header(rd);
  if (h.format != "coordinate") rd.fail("expected coordinate format");
  return from_triplets<double>(h.rows, h.cols, read_coordinate(rd, h));
}

Vector read_vector(const std::filesystem::path& path) {
  Reader rd(path);
  const MatrixMarketHeader h = parse_header(rd);
  if (h.cols != 1) rd.fail("expected a single column");
  if (h.format == "array") {
    const std::vector<double> vals = read_array(rd, h);
    return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
  }
  Vector v = Vector::Zero(h.rows);
  for (const auto& t : read_coordinate(rd, h)) v(t.row()) += t.value();
  return v;
}

void write_matrix_market(const SparseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  write_banner(out, path);
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  char buf[64];
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << (it.row() + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_vector(const Vector& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  char buf[64];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v(i));
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace saddlekit
