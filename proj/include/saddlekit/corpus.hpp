#pragma once

// Test problem acquisition: Matrix Market files, saddle partitioning of
// square matrices, the random saddle generator, consistent right-hand sides
// and a cached SuiteSparse fetcher.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saddlekit/scheme.hpp"

namespace saddlekit {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

// ---------------------------------------------------------------------------
// Matrix Market

struct MatrixMarketHeader {
  std::string format;    // coordinate | array
  std::string field;     // real
  std::string symmetry;  // general | symmetric | skew-symmetric
  Index rows = 0, cols = 0, entries = 0;
};

/// Reads a coordinate real matrix. Symmetric and skew-symmetric storage is
/// expanded, duplicates are summed and explicit zeros dropped.
SparseMatrix read_matrix_market(const std::filesystem::path& path);

/// Reads the size line only.
MatrixMarketHeader read_matrix_market_header(const std::filesystem::path& path);

/// Writes coordinate real general with 17 significant digits.
void write_matrix_market(const SparseMatrix& m, const std::filesystem::path& path);

/// Dense vector from a Matrix Market file: an n x 1 coordinate matrix or a
/// real general array.
Vector read_vector(const std::filesystem::path& path);
void write_vector(const Vector& v, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Saddle blocks

struct SaddleBlocks {
  SparseMatrix a, b, c;
  bool discarded_22_block = false;  // (2,2) block was nonzero and has been dropped
};

/// A = W[0:n,0:n], B = W[0:n,n:], C^T = -W[n:,0:n].
SaddleBlocks partition_saddle(const SparseMatrix& w, Index n, Index m);

/// [[A, B], [-C^T, 0]] as one square matrix.
SparseMatrix assemble_saddle(const SparseMatrix& a, const SparseMatrix& b, const SparseMatrix& c);

/// Largest m such that the trailing m x m block is zero and m <= order / 2.
Index infer_partition(const SparseMatrix& w);

struct RandomSaddleSpec {
  Index n = 100;
  Index m = 90;
  double density = 0.01;
  double xi = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A = xi I + R, B = xi [I; 0] + R, C^T = xi [I 0] + R with Bernoulli(density)
/// entry patterns and uniform(0, 1) values; right-hand side from the
/// all-ones solution.
SaddleProblem gen_random_saddle(const RandomSaddleSpec& spec);

/// f = A 1 + B 1, g = -C^T 1.
std::pair<Vector, Vector> make_rhs(const SparseMatrix& a, const SparseMatrix& b,
                                   const SparseMatrix& c);

/// Builds a problem from blocks, filling f/g from the all-ones solution when
/// not supplied and detecting the case when `kind` is empty.
SaddleProblem make_problem(SaddleBlocks blocks, std::string name,
                           std::optional<SaddleCase> kind = std::nullopt,
                           std::optional<Vector> f = std::nullopt,
                           std::optional<Vector> g = std::nullopt);

// ---------------------------------------------------------------------------
// SuiteSparse collection

class FetchError : public std::runtime_error {
 public:
  enum class Kind { Network, Http, Archive, Dimensions, Io };
  FetchError(Kind kind, const std::string& url, const std::string& what)
      : std::runtime_error(what + " [" + url + "]"), kind(kind), url(url) {}
  Kind kind;
  std::string url;
};

inline constexpr const char* kDefaultBaseUrl = "https://sparse.tamu.edu/MM";
inline constexpr const char* kCacheEnv = "SADDLEKIT_CACHE";
inline constexpr const char* kBaseUrlEnv = "SADDLEKIT_BASE_URL";

/// $SADDLEKIT_CACHE, else $XDG_CACHE_HOME/saddlekit, else ~/.cache/saddlekit.
std::filesystem::path default_cache_dir();
/// $SADDLEKIT_BASE_URL, else the public collection mirror.
std::string default_base_url();

struct FetchResult {
  std::filesystem::path matrix;
  std::optional<std::filesystem::path> rhs;  // <name>_b.mtx when the archive has one
  bool cache_hit = false;
};

/// Downloads base_url/group/name.tar.gz, extracts name.mtx (and name_b.mtx)
/// into cache_dir/group/name/ and validates the size line. A cache hit never
/// touches the network.
FetchResult fetch_suitesparse(const std::string& group, const std::string& name,
                              const std::filesystem::path& cache_dir,
                              const std::string& base_url);

// ---------------------------------------------------------------------------
// Manifest

struct CorpusEntry {
  std::string name;
  std::string group;                             // remote source
  std::optional<std::filesystem::path> matrix;   // square saddle file
  std::optional<std::filesystem::path> a, b, c;  // block files
  std::optional<std::filesystem::path> f, g;     // right-hand side files
  std::optional<RandomSaddleSpec> random;
  Index n = 0, m = 0;                            // partition, 0 = infer
  std::optional<SaddleCase> case_hint;
  Index expected_nnz = 0;                        // 0 = unchecked
};

/// INI-style text: one [name] section per entry with key = value lines.
/// Relative paths resolve against `base_dir`.
std::vector<CorpusEntry> parse_manifest(const std::string& text,
                                        const std::filesystem::path& base_dir = {});
std::vector<CorpusEntry> load_manifest(const std::filesystem::path& path);
std::string format_manifest_entry(const CorpusEntry& e);

/// The problems of the published experiments (SuiteSparse entries, the
/// random recipe, and file-only driven-cavity placeholders).
const std::vector<CorpusEntry>& bundled_manifest();
std::optional<CorpusEntry> find_entry(const std::vector<CorpusEntry>& entries,
                                      const std::string& name);

/// Parses an inline random spec "n=100,m=90,density=0.01,xi=0.1,seed=1".
RandomSaddleSpec parse_random_spec(const std::string& text);

struct ResolveOptions {
  std::filesystem::path cache_dir = default_cache_dir();
  std::string base_url = default_base_url();
  bool allow_fetch = true;
  std::function<void(const std::string&)> warn;  // nnz mismatch, discarded (2,2) block
};

/// Loads (fetching when needed) the problem an entry describes.
SaddleProblem resolve(const CorpusEntry& entry, const ResolveOptions& options = {});

}  // namespace saddlekit
