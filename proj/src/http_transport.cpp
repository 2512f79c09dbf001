#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>

#include "featflow/error.hpp"
#include "featflow/remote.hpp"

namespace featflow {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // path?query
};

SplitUrl split_url(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidParams, "not an absolute URL: '" + url + "'");
  }
  std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

void set_timeouts(httplib::Client& client, double seconds) {
  auto whole = static_cast<time_t>(std::floor(seconds));
  auto micros = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
  client.set_connection_timeout(whole, micros);
  client.set_read_timeout(whole, micros);
  client.set_write_timeout(whole, micros);
}

}  // namespace

Transport http_transport() {
  return [](const HttpRequest& request) -> HttpResponse {
    SplitUrl url = split_url(request.url);
    httplib::Client client(url.origin);
    set_timeouts(client, request.timeout_seconds);
    client.set_follow_location(true);
    httplib::Headers headers;
    std::string content_type = "application/octet-stream";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    httplib::Result result = request.method == "GET"
                                 ? client.Get(url.target, headers)
                                 : client.Post(url.target, headers, request.body, content_type);
    if (!result) {
      httplib::Error err = result.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        throw Error(ErrorCode::kTimeout, "request to " + url.origin + " timed out (" +
                                             httplib::to_string(err) + ")");
      }
      throw ServiceError(0, "no response from " + url.origin + ": " + httplib::to_string(err));
    }
    return {result->status, result->body};
  };
}

}  // namespace featflow
