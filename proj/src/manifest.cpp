#include <charconv>
#include <fstream>
#include <sstream>

#include "saddlekit/corpus.hpp"

namespace fs = std::filesystem;

namespace saddlekit {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("bad value for '" + key + "': '" + text + "'");
  return value;
}

template <>
double parse_number<double>(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw std::invalid_argument("bad value for '" + key + "': '" + text + "'");
  return v;
}

fs::path resolve_path(const std::string& value, const fs::path& base_dir) {
  fs::path p(value);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

CorpusEntry remote(std::string name, std::string group, Index n, Index m, SaddleCase kind, Index nnz) {
  CorpusEntry e;
  e.name = std::move(name);
  e.group = std::move(group);
  e.n = n;
  e.m = m;
  e.case_hint = kind;
  e.expected_nnz = nnz;
  return e;
}

CorpusEntry random_entry(std::string name, Index n, Index m, std::uint64_t seed) {
  CorpusEntry e;
  e.name = std::move(name);
  RandomSaddleSpec s;
  s.n = n;
  s.m = m;
  s.seed = seed;
  e.random = s;
  e.n = n;
  e.m = m;
  e.case_hint = SaddleCase::General;
  return e;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

RandomSaddleSpec parse_random_spec(const std::string& text) {
  RandomSaddleSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("random spec: expected key=value, got '" + item + "'");
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    if (key == "n") spec.n = parse_number<Index>(value, key);
    else if (key == "m") spec.m = parse_number<Index>(value, key);
    else if (key == "density") spec.density = parse_number<double>(value, key);
    else if (key == "xi") spec.xi = parse_number<double>(value, key);
    else if (key == "seed") spec.seed = parse_number<std::uint64_t>(value, key);
    else throw std::invalid_argument("random spec: unknown key '" + key + "'");
  }
  spec.validate();
  return spec;
}

std::vector<CorpusEntry> parse_manifest(const std::string& text, const fs::path& base_dir) {
  std::vector<CorpusEntry> entries;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw ParseError("manifest", line_no, what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      CorpusEntry e;
      e.name = trim(line.substr(1, line.size() - 2));
      if (e.name.empty()) fail("empty entry name");
      entries.push_back(std::move(e));
      continue;
    }
    if (entries.empty()) fail("key outside of an [entry] section");
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CorpusEntry& e = entries.back();
    try {
      if (key == "group") e.group = value;
      else if (key == "matrix") e.matrix = resolve_path(value, base_dir);
      else if (key == "a") e.a = resolve_path(value, base_dir);
      else if (key == "b") e.b = resolve_path(value, base_dir);
      else if (key == "c") e.c = resolve_path(value, base_dir);
      else if (key == "f") e.f = resolve_path(value, base_dir);
      else if (key == "g") e.g = resolve_path(value, base_dir);
      else if (key == "random") e.random = parse_random_spec(value);
      else if (key == "n") e.n = parse_number<Index>(value, key);
      else if (key == "m") e.m = parse_number<Index>(value, key);
      else if (key == "case") {
        if (value != "auto") e.case_hint = parse_case(value);
      } else if (key == "nnz") e.expected_nnz = parse_number<Index>(value, key);
      else fail("unknown key '" + key + "'");
    } catch (const std::invalid_argument& ex) {
      fail(ex.what());
    }
  }
  for (const CorpusEntry& e : entries) {
    const int sources = (e.matrix ? 1 : 0) + (e.a ? 1 : 0) + (e.random ? 1 : 0) + (!e.group.empty() ? 1 : 0);
    if (sources == 0) throw ParseError("manifest", line_no, "entry '" + e.name + "' has no source");
    if (e.a && !(e.b && e.c)) throw ParseError("manifest", line_no, "entry '" + e.name + "' needs a, b and c");
    if (e.f.has_value() != e.g.has_value()) {
      throw ParseError("manifest", line_no, "entry '" + e.name + "' must give both f and g");
    }
  }
  return entries;
}

std::vector<CorpusEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

std::string format_manifest_entry(const CorpusEntry& e) {
  std::ostringstream os;
  os << '[' << e.name << "]\n";
  if (!e.group.empty()) os << "group = " << e.group << '\n';
  if (e.matrix) os << "matrix = " << e.matrix->string() << '\n';
  if (e.a) os << "a = " << e.a->string() << '\n';
  if (e.b) os << "b = " << e.b->string() << '\n';
  if (e.c) os << "c = " << e.c->string() << '\n';
  if (e.f) os << "f = " << e.f->string() << '\n';
  if (e.g) os << "g = " << e.g->string() << '\n';
  if (e.random) {
    const RandomSaddleSpec& s = *e.random;
    os << "random = n=" << s.n << ",m=" << s.m << ",density=" << format_double(s.density)
       << ",xi=" << format_double(s.xi) << ",seed=" << s.seed << '\n';
  }
  if (e.n) os << "n = " << e.n << '\n';
  if (e.m) os << "m = " << e.m << '\n';
  if (e.case_hint) os << "case = " << to_string(*e.case_hint) << '\n';
  if (e.expected_nnz) os << "nnz = " << e.expected_nnz << '\n';
  return os.str();
}

const std::vector<CorpusEntry>& bundled_manifest() {
  static const std::vector<CorpusEntry> entries = [] {
    using enum SaddleCase;
    std::vector<CorpusEntry> v{
        remote("reorientation_1", "VDOL", 396, 281, Symmetric, 7326),
        remote("reorientation_4", "VDOL", 1596, 1121, Symmetric, 33630),
        remote("reorientation_8", "VDOL", 1826, 1282, Symmetric, 37894),
        remote("dynamicSoaringProblem_1", "VDOL", 363, 284, Symmetric, 5367),
        remote("dynamicSoaringProblem_4", "VDOL", 1794, 1397, Symmetric, 36516),
        remote("goddardRocketProblem_2", "VDOL", 434, 433, Symmetric, 9058),
        remote("tumorAntiAngiogenesis_1", "VDOL", 123, 82, Symmetric, 2748),
        remote("tumorAntiAngiogenesis_8", "VDOL", 294, 196, Symmetric, 4776),
        remote("rajat04", "Rajat", 1008, 33, Generalized, 8725),
        remote("rajat14", "Rajat", 171, 9, Generalized, 1475),
        remote("fpga_trans_01", "Sandia", 1154, 66, Generalized, 7382),
        remote("garon1", "Garon", 2775, 400, General, 84723),
        remote("garon2", "Garon", 11935, 1600, General, 373235),
        remote("tols90", "Bai", 72, 18, General, 1746),
        remote("tols340", "Bai", 272, 68, General, 2196),
        remote("tols1090", "Bai", 872, 218, General, 3546),
        remote("tols4000", "Bai", 3200, 800, General, 8784),
        random_entry("random1", 100, 90, 1),
        random_entry("random2", 100, 90, 2),
        random_entry("random3", 1000, 900, 3),
    };
    for (const char* re : {"100", "200", "500", "700", "900"}) {
      CorpusEntry e;
      e.name = std::string("drivencavity_Re") + re;
      e.n = 578;
      e.m = 81;
      e.case_hint = Generalized;
      v.push_back(std::move(e));
    }
    return v;
  }();
  return entries;
}

std::optional<CorpusEntry> find_entry(const std::vector<CorpusEntry>& entries, const std::string& name) {
  for (const CorpusEntry& e : entries)
    if (e.name == name) return e;
  return std::nullopt;
}

SaddleProblem resolve(const CorpusEntry& entry, const ResolveOptions& options) {
  auto warn = [&](const std::string& msg) {
    if (options.warn) options.warn(entry.name + ": " + msg);
  };
  std::optional<Vector> f, g;
  if (entry.f) {
    f = read_vector(*entry.f);
    g = read_vector(*entry.g);
  }

  if (entry.random) {
    SaddleProblem p = gen_random_saddle(*entry.random);
    p.name = entry.name;
    if (f) {
      p.f = std::move(*f);
      p.g = std::move(*g);
      p.validate();
    }
    return p;
  }

  if (entry.a) {
    SaddleBlocks blocks;
    blocks.a = read_matrix_market(*entry.a);
    blocks.b = read_matrix_market(*entry.b);
    blocks.c = read_matrix_market(*entry.c);
    return make_problem(std::move(blocks), entry.name, entry.case_hint, std::move(f), std::move(g));
  }

  fs::path path;
  std::optional<fs::path> shipped_rhs;
  if (entry.matrix) {
    path = *entry.matrix;
  } else if (!entry.group.empty()) {
    if (!options.allow_fetch && !fs::exists(options.cache_dir / entry.group / entry.name / (entry.name + ".mtx"))) {
      throw std::runtime_error(entry.name + ": not cached under " + options.cache_dir.string() +
                               " and fetching is disabled");
    }
    const FetchResult fetched = fetch_suitesparse(entry.group, entry.name, options.cache_dir, options.base_url);
    path = fetched.matrix;
    shipped_rhs = fetched.rhs;
  } else {
    throw std::runtime_error(entry.name + ": file-only entry without a local matrix path");
  }

  const SparseMatrix w = read_matrix_market(path);
  if (w.rows() != w.cols()) throw DimensionError(entry.name + ": saddle matrix is not square");
  if (entry.expected_nnz && w.nonZeros() != entry.expected_nnz) {
    warn("nnz " + std::to_string(w.nonZeros()) + " differs from the recorded " +
         std::to_string(entry.expected_nnz));
  }
  Index n = entry.n, m = entry.m;
  if (n == 0 && m == 0) {
    m = infer_partition(w);
    n = w.rows() - m;
  } else if (n == 0) {
    n = w.rows() - m;
  } else if (m == 0) {
    m = w.rows() - n;
  }
  SaddleBlocks blocks = partition_saddle(w, n, m);
  if (blocks.discarded_22_block) warn("nonzero (2,2) block discarded");
  if (!f && shipped_rhs) {
    const Vector rhs = read_vector(*shipped_rhs);
    if (rhs.size() == n + m) {
      f = rhs.head(n);
      g = rhs.tail(m);
    } else {
      warn("shipped right-hand side has length " + std::to_string(rhs.size()) + ", using the all-ones solution");
    }
  }
  return make_problem(std::move(blocks), entry.name, entry.case_hint, std::move(f), std::move(g));
}

}  // namespace saddlekit
