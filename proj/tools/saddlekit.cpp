// saddlekit command line: solve, gen-random, fetch, bench, validate.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "saddlekit/bench.hpp"

namespace fs = std::filesystem;
using namespace saddlekit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStrict = 2;

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

bool looks_like_manifest(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".ini" || ext == ".manifest" || ext == ".txt";
}

struct SolveArgs {
  std::string target;
  std::string manifest;
  std::string entry;
  std::string profile = "small";
  std::string kind = "auto";
  bool m_orth = false;
  double tol = 1e-5;
  int max_outer = 1000;
  int restart = 10;
  std::uint64_t seed = 0;
  std::string out;
  long long n = 0, m = 0;
  bool strict = false;
};

CorpusEntry pick_entry(const SolveArgs& a) {
  if (!a.manifest.empty() || (!a.target.empty() && looks_like_manifest(a.target))) {
    const auto entries = load_manifest(a.manifest.empty() ? fs::path(a.target) : fs::path(a.manifest));
    if (entries.empty()) throw std::invalid_argument("manifest has no entries");
    if (a.entry.empty()) return entries.front();
    auto e = find_entry(entries, a.entry);
    if (!e) throw std::invalid_argument("no entry '" + a.entry + "' in manifest");
    return *e;
  }
  if (a.target.empty()) throw std::invalid_argument("solve: a matrix file, manifest or entry name is required");
  CorpusEntry e;
  if (fs::exists(a.target)) {
    e.name = fs::path(a.target).stem().string();
    e.matrix = a.target;
  } else if (auto b = find_entry(bundled_manifest(), a.target)) {
    e = *b;
  } else {
    throw std::invalid_argument("no such file or bundled entry: " + a.target);
  }
  if (a.n) e.n = a.n;
  if (a.m) e.m = a.m;
  return e;
}

int run_solve(const SolveArgs& a) {
  CorpusEntry e = pick_entry(a);
  if (e.random) e.random->seed += a.seed;
  if (a.kind != "auto") e.case_hint = parse_case(a.kind);
  else if (e.matrix) e.case_hint.reset();

  ResolveOptions ro;
  ro.warn = warn;
  const SaddleProblem p = resolve(e, ro);

  SolveOptions opts;
  opts.assemble.m_orth = a.m_orth;
  opts.outer_stop = StopCriteria{a.tol, a.max_outer};
  opts.restart = a.restart;
  const SaddleSolution sol = solve(p, ToleranceProfile::named(a.profile), opts);
  const SolveReport& r = sol.report;

  std::printf("%s case=%s profile=%s n=%lld m=%lld status=%s%s outer=%d true_rel_residual=%.3e nnz=%lld\n",
              p.name.c_str(), to_string(p.kind), a.profile.c_str(), static_cast<long long>(p.n()),
              static_cast<long long>(p.m()), to_string(r.status), marker(r.status), r.outer_iterations,
              r.final_true_relative_residual, static_cast<long long>(r.nnz_total()));
  if (!r.message.empty()) std::fprintf(stderr, "note: %s\n", r.message.c_str());

  if (!a.out.empty()) {
    BenchRow row;
    row.problem = p.name;
    row.profile = a.profile;
    row.m_orth = a.m_orth;
    row.kind = p.kind;
    row.report = r;
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "results.csv");
    csv << csv_header() << '\n' << csv_row(row) << '\n';
    if (!csv) throw std::runtime_error("cannot write " + (fs::path(a.out) / "results.csv").string());
  }
  if (a.strict && r.status != SolveStatus::Converged) return kExitStrict;
  return kExitOk;
}

int run_gen_random(const RandomSaddleSpec& spec, const std::string& out_dir) {
  const SaddleProblem p = gen_random_saddle(spec);
  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  write_matrix_market(p.a, dir / "A.mtx");
  write_matrix_market(p.b, dir / "B.mtx");
  write_matrix_market(p.c, dir / "C.mtx");
  write_vector(p.f, dir / "f.mtx");
  write_vector(p.g, dir / "g.mtx");

  CorpusEntry e;
  e.name = "random_n" + std::to_string(spec.n) + "_m" + std::to_string(spec.m) + "_s" + std::to_string(spec.seed);
  e.a = "A.mtx";
  e.b = "B.mtx";
  e.c = "C.mtx";
  e.f = "f.mtx";
  e.g = "g.mtx";
  e.n = spec.n;
  e.m = spec.m;
  e.case_hint = SaddleCase::General;
  std::ofstream man(dir / "manifest.ini");
  man << format_manifest_entry(e);
  if (!man) throw std::runtime_error("cannot write manifest");
  std::printf("wrote %s (nnz A=%lld B=%lld C=%lld)\n", (dir / "manifest.ini").string().c_str(),
              static_cast<long long>(p.a.nonZeros()), static_cast<long long>(p.b.nonZeros()),
              static_cast<long long>(p.c.nonZeros()));
  return kExitOk;
}

int run_validate(const std::string& path, long long n, long long m) {
  const SparseMatrix w = read_matrix_market(path);
  std::printf("%s: %lld x %lld, nnz %lld\n", path.c_str(), static_cast<long long>(w.rows()),
              static_cast<long long>(w.cols()), static_cast<long long>(w.nonZeros()));
  if (w.rows() != w.cols()) {
    std::printf("not square: not a saddle matrix\n");
    return kExitUsage;
  }
  Index mm = m ? m : (n ? w.rows() - n : infer_partition(w));
  Index nn = n ? n : w.rows() - mm;
  const SaddleBlocks blocks = partition_saddle(w, nn, mm);
  std::printf("partition n=%lld m=%lld%s\n", static_cast<long long>(nn), static_cast<long long>(mm),
              (n || m) ? "" : " (inferred)");
  std::printf("(2,2) block: %s\n", blocks.discarded_22_block ? "NONZERO (would be discarded)" : "zero");
  std::printf("case: %s\n", to_string(detect_case(blocks.a, blocks.b, blocks.c)));
  return blocks.discarded_22_block ? kExitUsage : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate-nullspace multi-layer Krylov solvers for saddle point systems"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem and print a summary line");
  solve_cmd->add_option("target", sa.target, "Matrix Market file, manifest file or bundled entry name");
  solve_cmd->add_option("--manifest", sa.manifest, "Manifest file");
  solve_cmd->add_option("--entry", sa.entry, "Entry name within the manifest");
  solve_cmd->add_option("--profile", sa.profile, "Tolerance profile")
      ->check(CLI::IsMember({"large", "mix", "small", "exact"}));
  solve_cmd->add_option("--case", sa.kind, "Saddle case")
      ->check(CLI::IsMember({"auto", "symmetric", "generalized", "general"}));
  solve_cmd->add_flag("--m-orth", sa.m_orth, "M-orthogonalize the nullspace basis");
  solve_cmd->add_option("--tol", sa.tol, "Outer relative tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-outer", sa.max_outer, "Outer iteration cap")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--restart", sa.restart, "Outer restart length")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", sa.seed, "Offset added to random entry seeds");
  solve_cmd->add_option("--out", sa.out, "Directory for results.csv");
  solve_cmd->add_option("--n", sa.n, "Leading block size of a square saddle file");
  solve_cmd->add_option("--m", sa.m, "Constraint count of a square saddle file");
  solve_cmd->add_flag("--strict", sa.strict, "Exit 2 unless converged");

  RandomSaddleSpec rs;
  std::string gen_out = ".";
  auto* gen_cmd = app.add_subcommand("gen-random", "Write a random saddle problem as Matrix Market files");
  gen_cmd->add_option("--n", rs.n, "Leading block size");
  gen_cmd->add_option("--m", rs.m, "Constraint count");
  gen_cmd->add_option("--density", rs.density, "Entry inclusion probability");
  gen_cmd->add_option("--xi", rs.xi, "Identity perturbation");
  gen_cmd->add_option("--seed", rs.seed, "Generator seed");
  gen_cmd->add_option("--out", gen_out, "Output directory");

  std::string group, name, base_url = default_base_url(), cache = default_cache_dir().string();
  auto* fetch_cmd = app.add_subcommand("fetch", "Download a collection matrix into the cache");
  fetch_cmd->add_option("--group", group, "Collection group")->required();
  fetch_cmd->add_option("--name", name, "Matrix name")->required();
  fetch_cmd->add_option("--base-url", base_url, "Archive base URL");
  fetch_cmd->add_option("--cache", cache, "Cache directory");

  std::string config_path, bench_out;
  bool bench_strict = false;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark configuration");
  bench_cmd->add_option("--config", config_path, "Config file")->required();
  bench_cmd->add_option("--out", bench_out, "Override output_dir");
  bench_cmd->add_flag("--strict", bench_strict, "Exit 2 when any entry fails");

  std::string validate_path;
  long long vn = 0, vm = 0;
  auto* validate_cmd = app.add_subcommand("validate", "Check a square saddle matrix file");
  validate_cmd->add_option("matrix", validate_path, "Matrix Market file")->required();
  validate_cmd->add_option("--n", vn, "Leading block size");
  validate_cmd->add_option("--m", vm, "Constraint count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) return run_solve(sa);
    if (*gen_cmd) return run_gen_random(rs, gen_out);
    if (*fetch_cmd) {
      const FetchResult r = fetch_suitesparse(group, name, cache, base_url);
      std::printf("%s%s\n", r.matrix.string().c_str(), r.cache_hit ? " (cached)" : "");
      return kExitOk;
    }
    if (*bench_cmd) {
      RunConfig cfg = load_run_config(config_path);
      if (!bench_out.empty()) cfg.output_dir = bench_out;
      cfg.strict = cfg.strict || bench_strict;
      cfg.resolve.warn = warn;
      const BenchResult result = run_benchmark(cfg);
      write_reports(result, cfg, cfg.output_dir);
      std::fputs(format_tables(result, cfg).c_str(), stdout);
      for (const auto& r : result.rows)
        if (!r.error.empty()) std::fprintf(stderr, "%s/%s: %s\n", r.problem.c_str(), r.profile.c_str(), r.error.c_str());
      return (cfg.strict && result.any_failure()) ? kExitStrict : kExitOk;
    }
    if (*validate_cmd) return run_validate(validate_path, vn, vm);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
