#pragma once

// Batch runner: every (entry x profile) combination is solved and written
// to machine-readable reports plus a plain-text table view.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "saddlekit/corpus.hpp"

namespace saddlekit {

struct RunConfig {
  std::vector<CorpusEntry> entries;
  std::vector<std::string> profiles;  // large | mix | small | exact
  bool m_orth = false;
  double outer_tol = 1e-5;
  int max_outer = 1000;
  int restart = 10;
  std::filesystem::path output_dir = "saddlekit-out";
  std::uint64_t seed = 0;  // added to the seed of every random entry
  bool baseline = false;   // unpreconditioned GMRES(restart) alongside
  unsigned workers = 0;    // 0 = hardware concurrency
  bool strict = false;
  ResolveOptions resolve;

  /// Throws std::invalid_argument when there is nothing to run or a
  /// profile name or numeric setting is invalid.
  void validate() const;
};

/// Key-value text, one setting per line, '#' comments:
///
///   manifest = problems.ini     # entries from a manifest file (repeatable)
///   entry = tols90              # a manifest or bundled entry (repeatable)
///   profiles = large, mix, small
///   m_orth = false
///   outer_tol = 1e-5
///   max_outer = 1000
///   restart = 10
///   output_dir = results
///   seed = 0
///   baseline = false
///   workers = 1
///   strict = false
///   cache_dir = /path/to/cache
///   base_url = https://...
///   allow_fetch = true
///
/// Without any `entry` line every entry of the loaded manifests is used.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct BenchRow {
  std::string problem;
  std::string profile;  // profile name, or "gmres" for baseline rows
  bool m_orth = false;
  std::optional<SaddleCase> kind;  // empty when the entry could not be loaded
  std::optional<SolveReport> report;
  std::string error;  // resolution failure

  /// Status text including its table marker, or "error".
  std::string status_text() const;
  /// Load error, factorization failure or resource exhaustion.
  bool failed() const;
};

struct BenchResult {
  std::vector<BenchRow> rows;      // entries x profiles, entry-major
  std::vector<BenchRow> baseline;  // one per entry when requested
  bool any_failure() const;
};

/// Runs every combination on a bounded worker pool. Per-entry failures are
/// recorded as rows and never abort the batch.
BenchResult run_benchmark(const RunConfig& config);

/// results.csv, baseline.csv (when present), residuals.csv, histories.json,
/// profiles.csv and tables.txt under `dir`.
void write_reports(const BenchResult& result, const RunConfig& config,
                   const std::filesystem::path& dir);

std::string csv_header();
std::string csv_row(const BenchRow& row);
/// Human-readable tables: problems as rows, profiles as columns, averages to
/// one decimal.
std::string format_tables(const BenchResult& result, const RunConfig& config);

}  // namespace saddlekit
