#pragma once

// Cached retrieval of RDB records from a remote water-data service. The
// transport is injected so that the cache logic has no network dependency;
// see http_transport.hpp for the cpp-httplib implementation.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nitrosep/error.hpp"
#include "nitrosep/ingest.hpp"

namespace nitrosep {

// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Performs one GET. Throws NetworkUnavailable when no response is obtained.
using HttpGet = std::function<HttpResponse(const std::string& url)>;

struct RemoteRequest {
  std::string site;
  std::vector<std::string> codes;
  DateRange range;

  std::string cache_key() const {
    std::string key = site + "|";
    for (std::size_t i = 0; i < codes.size(); ++i) key += (i ? "," : "") + codes[i];
    key += "|" + format_iso_date(range.start) + "|" + format_iso_date(range.end);
    return key;
  }
};

struct FetchOptions {
  // Placeholders: {site}, {codes} (comma separated), {start}, {end}.
  std::string url_template;
  std::filesystem::path cache_dir;
  bool offline = false;
};

inline std::string expand_url(const std::string& tmpl, const RemoteRequest& req) {
  std::string codes;
  for (std::size_t i = 0; i < req.codes.size(); ++i) codes += (i ? "," : "") + req.codes[i];
  const std::pair<std::string, std::string> subs[] = {
      {"{site}", req.site},
      {"{codes}", codes},
      {"{start}", format_iso_date(req.range.start)},
      {"{end}", format_iso_date(req.range.end)},
  };
  std::string out = tmpl;
  for (const auto& [key, value] : subs) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
      out.replace(pos, key.size(), value);
  }
  return out;
}

inline std::filesystem::path cache_path(const FetchOptions& opts, const RemoteRequest& req) {
  return opts.cache_dir / (hex64(fnv1a64(req.cache_key())) + ".rdb");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::random_device rd;
  const auto tmp = path.string() + ".tmp." + hex64((std::uint64_t{rd()} << 32) | rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheWriteFailed(tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CacheWriteFailed(tmp);
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CacheWriteFailed(path.string());
  }
}

// Returns the RDB bytes for `req`, from the cache when present. Only a 200
// response is cached.
inline std::string fetch_remote(const RemoteRequest& req, const FetchOptions& opts,
                                const HttpGet& get) {
  const auto path = cache_path(opts, req);
  if (std::filesystem::exists(path)) return read_file(path);
  if (opts.offline) throw NetworkUnavailable("offline and no cached response for " + req.cache_key());
  if (!get) throw NetworkUnavailable("no HTTP transport configured");
  HttpResponse resp = get(expand_url(opts.url_template, req));
  if (resp.status != 200) throw HttpStatus(resp.status);
  try {
    write_file_atomic(path, resp.body);
  } catch (const CacheWriteFailed&) {
    throw;
  } catch (const std::exception&) {
    throw CacheWriteFailed(path.string());
  }
  return std::move(resp.body);
}

}  // namespace nitrosep
