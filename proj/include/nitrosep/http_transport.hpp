#pragma once

// cpp-httplib transport for fetch_remote. Define CPPHTTPLIB_OPENSSL_SUPPORT
// (and link OpenSSL) before including to allow https:// URLs.

#include <string>

#include "httplib.h"
#include "nitrosep/fetch.hpp"

namespace nitrosep {

inline HttpGet httplib_transport(int timeout_seconds = 30) {
  return [timeout_seconds](const std::string& url) -> HttpResponse {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw NetworkUnavailable("not an absolute URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) throw NetworkUnavailable("unsupported URL " + origin);
    client.set_connection_timeout(timeout_seconds);
    client.set_read_timeout(timeout_seconds);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) throw NetworkUnavailable(httplib::to_string(res.error()) + " for " + url);
    return {res->status, res->body};
  };
}

}  // namespace nitrosep
