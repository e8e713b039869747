#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>

#include <curl/curl.h>
#include <zlib.h>

#include "saddlekit/corpus.hpp"

namespace fs = std::filesystem;

namespace saddlekit {

namespace {

std::size_t append_body(char* data, std::size_t size, std::size_t count, void* user) {
  auto* body = static_cast<std::string*>(user);
  body->append(data, size * count);
  return size * count;
}

std::string download(const std::string& url) {
  static const bool initialized = [] { return curl_global_init(CURL_GLOBAL_DEFAULT) == CURLE_OK; }();
  if (!initialized) throw FetchError(FetchError::Kind::Network, url, "libcurl initialization failed");

  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), &curl_easy_cleanup);
  if (!curl) throw FetchError(FetchError::Kind::Network, url, "cannot create transfer handle");
  std::string body;
  char errbuf[CURL_ERROR_SIZE] = {0};
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, &append_body);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &body);
  curl_easy_setopt(curl.get(), CURLOPT_ERRORBUFFER, errbuf);
  curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT, 30L);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, 600L);

  const CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) {
    throw FetchError(FetchError::Kind::Network, url,
                     std::string("download failed: ") + (errbuf[0] ? errbuf : curl_easy_strerror(rc)));
  }
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  // file:// transfers report 0.
  if (status != 0 && (status < 200 || status >= 300)) {
    throw FetchError(FetchError::Kind::Http, url, "HTTP status " + std::to_string(status));
  }
  return body;
}

std::string gunzip(const std::string& compressed, const std::string& url) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) {
    throw FetchError(FetchError::Kind::Archive, url, "zlib initialization failed");
  }
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FetchError(FetchError::Kind::Archive, url, "corrupt gzip stream");
    }
    out.append(buf, sizeof buf - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw FetchError(FetchError::Kind::Archive, url, "truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

std::uint64_t octal(const char* field, std::size_t len) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < len && field[i]; ++i) {
    if (field[i] == ' ') continue;
    if (field[i] < '0' || field[i] > '7') break;
    v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
  }
  return v;
}

// Regular files of a ustar archive, keyed by basename.
std::vector<std::pair<std::string, std::string>> untar(const std::string& tar, const std::string& url) {
  std::vector<std::pair<std::string, std::string>> files;
  std::size_t pos = 0;
  std::string long_name;
  while (pos + 512 <= tar.size()) {
    const char* h = tar.data() + pos;
    if (std::all_of(h, h + 512, [](char c) { return c == 0; })) break;
    unsigned checksum = 0;
    for (int i = 0; i < 512; ++i) checksum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(h[i]);
    if (checksum != octal(h + 148, 8)) throw FetchError(FetchError::Kind::Archive, url, "tar header checksum mismatch");

    std::string name(h, strnlen(h, 100));
    const std::string prefix(h + 345, strnlen(h + 345, 155));
    if (std::memcmp(h + 257, "ustar", 5) == 0 && !prefix.empty()) name = prefix + "/" + name;
    if (!long_name.empty()) {
      name = long_name;
      long_name.clear();
    }
    const std::uint64_t size = octal(h + 124, 12);
    const char type = h[156];
    pos += 512;
    if (pos + size > tar.size()) throw FetchError(FetchError::Kind::Archive, url, "tar member truncated");
    std::string content = tar.substr(pos, size);
    pos += (size + 511) / 512 * 512;

    if (type == 'L') {
      long_name = std::string(content.c_str());
    } else if (type == '0' || type == '\0') {
      files.emplace_back(fs::path(name).filename().string(), std::move(content));
    }
  }
  return files;
}

void write_atomically(const fs::path& target, const std::string& content, const std::string& url) {
  std::random_device rd;
  const fs::path tmp = target.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw FetchError(FetchError::Kind::Io, url, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw FetchError(FetchError::Kind::Io, url, "cannot move into " + target.string());
  }
}

}  // namespace

fs::path default_cache_dir() {
  if (const char* env = std::getenv(kCacheEnv); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "saddlekit";
  if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "saddlekit";
  return fs::temp_directory_path() / "saddlekit";
}

std::string default_base_url() {
  if (const char* env = std::getenv(kBaseUrlEnv); env && *env) return env;
  return kDefaultBaseUrl;
}

FetchResult fetch_suitesparse(const std::string& group, const std::string& name,
                              const fs::path& cache_dir, const std::string& base_url) {
  if (group.empty() || name.empty()) throw std::invalid_argument("fetch: group and name are required");
  const fs::path dir = cache_dir / group / name;
  const fs::path matrix = dir / (name + ".mtx");
  const fs::path rhs = dir / (name + "_b.mtx");

  FetchResult result;
  result.matrix = matrix;
  if (fs::exists(matrix)) {
    result.cache_hit = true;
    if (fs::exists(rhs)) result.rhs = rhs;
    return result;
  }

  std::string base = base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const std::string url = base + "/" + group + "/" + name + ".tar.gz";

  const auto files = untar(gunzip(download(url), url), url);
  const std::string* body = nullptr;
  const std::string* rhs_body = nullptr;
  for (const auto& [file, content] : files) {
    if (file == name + ".mtx") body = &content;
    if (file == name + "_b.mtx") rhs_body = &content;
  }
  if (!body) throw FetchError(FetchError::Kind::Archive, url, "archive has no " + name + ".mtx");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FetchError(FetchError::Kind::Io, url, "cannot create " + dir.string());

  // Validate before publishing into the cache.
  const fs::path staged = dir / (name + ".mtx.staged");
  write_atomically(staged, *body, url);
  try {
    const MatrixMarketHeader h = read_matrix_market_header(staged);
    if (h.rows <= 0 || h.cols <= 0) {
      throw FetchError(FetchError::Kind::Dimensions, url, "declared dimensions are empty");
    }
    const SparseMatrix parsed = read_matrix_market(staged);
    if (parsed.rows() != h.rows || parsed.cols() != h.cols) {
      throw FetchError(FetchError::Kind::Dimensions, url, "parsed dimensions differ from header");
    }
  } catch (const ParseError& e) {
    fs::remove(staged, ec);
    throw FetchError(FetchError::Kind::Archive, url, std::string("unreadable matrix: ") + e.what());
  } catch (...) {
    fs::remove(staged, ec);
    throw;
  }
  if (rhs_body) {
    write_atomically(rhs, *rhs_body, url);
    result.rhs = rhs;
  }
  fs::rename(staged, matrix, ec);
  if (ec) throw FetchError(FetchError::Kind::Io, url, "cannot move into " + matrix.string());
  return result;
}

}  // namespace saddlekit
