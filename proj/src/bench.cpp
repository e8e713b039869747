#include "saddlekit/bench.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;

namespace saddlekit {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("config: bad number for '" + key + "': '" + v + "'");
  return d;
}

long long parse_int(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument("config: bad integer for '" + key + "': '" + v + "'");
  return i;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void RunConfig::validate() const {
  if (entries.empty()) throw std::invalid_argument("run config: no entries");
  if (profiles.empty()) throw std::invalid_argument("run config: no profiles");
  for (const auto& p : profiles) ToleranceProfile::named(p);
  if (!(outer_tol > 0.0)) throw std::invalid_argument("run config: outer_tol must be positive");
  if (max_outer < 1) throw std::invalid_argument("run config: max_outer must be at least 1");
  if (restart < 1) throw std::invalid_argument("run config: restart must be at least 1");
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  std::vector<CorpusEntry> pool;
  std::vector<std::string> names;
  bool have_manifest = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config", line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "manifest") {
        fs::path p(value);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        for (auto& e : load_manifest(p)) pool.push_back(std::move(e));
        have_manifest = true;
      } else if (key == "entry") {
        names.push_back(value);
      } else if (key == "profiles") {
        cfg.profiles.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
          item = trim(item);
          if (!item.empty()) cfg.profiles.push_back(item);
        }
      } else if (key == "m_orth") {
        cfg.m_orth = parse_bool(value, key);
      } else if (key == "outer_tol") {
        cfg.outer_tol = parse_double(value, key);
      } else if (key == "max_outer") {
        cfg.max_outer = static_cast<int>(parse_int(value, key));
      } else if (key == "restart") {
        cfg.restart = static_cast<int>(parse_int(value, key));
      } else if (key == "output_dir") {
        fs::path p(value);
        cfg.output_dir = (p.is_relative() && !base_dir.empty()) ? base_dir / p : p;
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
      } else if (key == "baseline") {
        cfg.baseline = parse_bool(value, key);
      } else if (key == "workers") {
        cfg.workers = static_cast<unsigned>(parse_int(value, key));
      } else if (key == "strict") {
        cfg.strict = parse_bool(value, key);
      } else if (key == "cache_dir") {
        cfg.resolve.cache_dir = value;
      } else if (key == "base_url") {
        cfg.resolve.base_url = value;
      } else if (key == "allow_fetch") {
        cfg.resolve.allow_fetch = parse_bool(value, key);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ParseError("config", line_no, ex.what());
    }
  }

  if (names.empty() && have_manifest) {
    cfg.entries = pool;
  } else {
    for (const auto& name : names) {
      auto e = find_entry(pool, name);
      if (!e) e = find_entry(bundled_manifest(), name);
      if (!e) throw std::invalid_argument("config: unknown entry '" + name + "'");
      cfg.entries.push_back(*e);
    }
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string BenchRow::status_text() const {
  if (!report) return "error";
  return std::string(to_string(report->status)) + marker(report->status);
}

bool BenchRow::failed() const {
  if (!report) return true;
  return report->status == SolveStatus::FactorizationFailed ||
         report->status == SolveStatus::ResourceExhausted;
}

bool BenchResult::any_failure() const {
  for (const auto& r : rows)
    if (r.failed()) return true;
  for (const auto& r : baseline)
    if (r.failed()) return true;
  return false;
}

BenchResult run_benchmark(const RunConfig& config) {
  config.validate();
  const std::size_t ne = config.entries.size();
  const std::size_t np = config.profiles.size();

  std::vector<std::optional<SaddleProblem>> problems(ne);
  std::vector<std::string> load_errors(ne);
  parallel_for(ne, config.workers, [&](std::size_t i) {
    CorpusEntry e = config.entries[i];
    if (e.random) e.random->seed += config.seed;
    try {
      problems[i] = resolve(e, config.resolve);
    } catch (const std::exception& ex) {
      load_errors[i] = ex.what();
    }
  });

  SolveOptions opts;
  opts.assemble.m_orth = config.m_orth;
  opts.outer_stop = StopCriteria{config.outer_tol, config.max_outer};
  opts.restart = config.restart;

  BenchResult result;
  result.rows.resize(ne * np);
  if (config.baseline) result.baseline.resize(ne);
  const std::size_t per_entry = np + (config.baseline ? 1 : 0);

  parallel_for(ne * per_entry, config.workers, [&](std::size_t task) {
    const std::size_t i = task / per_entry;
    const std::size_t k = task % per_entry;
    const bool is_baseline = k == np;
    BenchRow& row = is_baseline ? result.baseline[i] : result.rows[i * np + k];
    row.problem = config.entries[i].name;
    row.profile = is_baseline ? "gmres" : config.profiles[k];
    row.m_orth = !is_baseline && config.m_orth;
    if (!problems[i]) {
      row.error = load_errors[i];
      return;
    }
    const SaddleProblem& p = *problems[i];
    row.kind = p.kind;
    try {
      SaddleSolution sol = is_baseline ? solve_baseline(p, opts)
                                       : solve(p, ToleranceProfile::named(config.profiles[k]), opts);
      row.report = std::move(sol.report);
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  });
  return result;
}

std::string csv_header() {
  return "problem,case,profile,m_orth,outer_iters,status,true_rel_residual,nnz_Z,nnz_U,nnz_W,"
         "nnz_Zbar,avg_lsqr,avg_cg,avg_inner_fgmres,avg_mrs";
}

std::string csv_row(const BenchRow& row) {
  std::ostringstream os;
  os << csv_field(row.problem) << ',' << (row.kind ? to_string(*row.kind) : "") << ','
     << csv_field(row.profile) << ',' << (row.m_orth ? 1 : 0) << ',';
  if (!row.report) {
    os << ",error,,,,,,,,,";
    return os.str();
  }
  const SolveReport& r = *row.report;
  os << r.outer_iterations << ',' << row.status_text() << ',' << fmt(r.final_true_relative_residual)
     << ',' << r.nnz_z << ',' << r.nnz_u << ',' << r.nnz_w << ',' << r.nnz_zbar << ','
     << fmt(r.inner.average_lsqr()) << ',' << fmt(r.inner.cg.average()) << ','
     << fmt(r.inner.inner_fgmres.average()) << ',' << fmt(r.inner.mrs.average());
  return os.str();
}

std::string format_tables(const BenchResult& result, const RunConfig& config) {
  const std::size_t np = config.profiles.size();
  const std::size_t ne = np ? result.rows.size() / np : 0;
  std::vector<std::string> columns = config.profiles;
  if (!result.baseline.empty()) columns.push_back("gmres");

  auto cell_row = [&](std::size_t i, std::size_t k) -> const BenchRow& {
    return k < np ? result.rows[i * np + k] : result.baseline[i];
  };

  std::size_t name_width = 7;
  for (std::size_t i = 0; i < ne; ++i) name_width = std::max(name_width, result.rows[i * np].problem.size());

  auto table = [&](const std::string& title, auto&& cell) {
    std::ostringstream os;
    os << title << '\n';
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-4s %-*s %-12s", "#", static_cast<int>(name_width), "problem", "case");
    os << buf;
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, " %18s", c.c_str());
      os << buf;
    }
    os << '\n';
    for (std::size_t i = 0; i < ne; ++i) {
      const BenchRow& first = result.rows[i * np];
      std::snprintf(buf, sizeof buf, "%-4zu %-*s %-12s", i + 1, static_cast<int>(name_width),
                    first.problem.c_str(), first.kind ? to_string(*first.kind) : "-");
      os << buf;
      for (std::size_t k = 0; k < columns.size(); ++k) {
        const std::string text = cell(cell_row(i, k));
        // Markers are multi-byte; pad on visible characters.
        std::size_t visible = 0;
        for (unsigned char ch : text) visible += (ch & 0xC0) != 0x80;
        os << ' ' << std::string(visible < 18 ? 18 - visible : 0, ' ') << text;
      }
      os << '\n';
    }
    os << '\n';
    return os.str();
  };

  std::string out;
  out += table("Outer iterations", [](const BenchRow& r) -> std::string {
    if (!r.report) return "error";
    return std::to_string(r.report->outer_iterations) + marker(r.report->status);
  });
  out += table("Preconditioner nonzeros", [](const BenchRow& r) -> std::string {
    if (!r.report) return "-";
    if (r.profile == "gmres") return "-";
    return std::to_string(r.report->nnz_total());
  });
  out += table("Average inner iterations (lsqr/cg or lsqr/fgmres/mrs)", [](const BenchRow& r) -> std::string {
    if (!r.report || r.profile == "gmres") return "-";
    const InnerCounters& c = r.report->inner;
    if (r.kind == SaddleCase::Symmetric) return fmt1(c.average_lsqr()) + "/" + fmt1(c.cg.average());
    return fmt1(c.average_lsqr()) + "/" + fmt1(c.inner_fgmres.average()) + "/" + fmt1(c.mrs.average());
  });
  out += table("Final true relative residual", [](const BenchRow& r) -> std::string {
    if (!r.report) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", r.report->final_true_relative_residual);
    return buf;
  });
  out += "Markers: ‡ max iterations, ⋆ true residual above tolerance, † factorization failed, § resources exhausted\n";
  return out;
}

void write_reports(const BenchResult& result, const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);

  std::string csv = csv_header() + "\n";
  for (const auto& r : result.rows) csv += csv_row(r) + "\n";
  write_file(dir / "results.csv", csv);

  if (!result.baseline.empty()) {
    std::string b = csv_header() + "\n";
    for (const auto& r : result.baseline) b += csv_row(r) + "\n";
    write_file(dir / "baseline.csv", b);
  }

  std::string res = "problem,case,profile,status,true_rel_residual\n";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  auto record = [&](const BenchRow& r) {
    const std::string kind = r.kind ? to_string(*r.kind) : "";
    res += csv_field(r.problem) + "," + kind + "," + csv_field(r.profile) + "," + r.status_text() + "," +
           (r.report ? fmt(r.report->final_true_relative_residual) : std::string()) + "\n";
    nlohmann::ordered_json j;
    j["problem"] = r.problem;
    j["case"] = kind;
    j["profile"] = r.profile;
    j["m_orth"] = r.m_orth;
    j["status"] = r.status_text();
    if (r.report) {
      j["outer_iterations"] = r.report->outer_iterations;
      j["true_rel_residual"] = r.report->final_true_relative_residual;
      j["residual_history"] = r.report->residual_history;
      if (!r.report->message.empty()) j["message"] = r.report->message;
    } else {
      j["error"] = r.error;
    }
    runs.push_back(std::move(j));
  };
  for (const auto& r : result.rows) record(r);
  for (const auto& r : result.baseline) record(r);
  write_file(dir / "residuals.csv", res);
  write_file(dir / "histories.json", runs.dump(1) + "\n");

  std::string prof = "profile,tau_saroc,rho_saroc,tau_fsai,rho_fsai,tau_mgs,w_mgs,eps_in,eps_innermost\n";
  for (const auto& name : config.profiles) {
    const ToleranceProfile p = ToleranceProfile::named(name);
    prof += p.name + "," + fmt(p.tau_saroc) + "," + fmt(p.rho_saroc) + "," + fmt(p.tau_fsai) + "," +
            fmt(p.rho_fsai) + "," + fmt(p.tau_mgs) + "," + std::to_string(p.w_mgs) + "," + fmt(p.eps_in) +
            "," + fmt(p.eps_innermost) + "\n";
  }
  write_file(dir / "profiles.csv", prof);
  write_file(dir / "tables.txt", format_tables(result, config));
}

}  // namespace saddlekit
