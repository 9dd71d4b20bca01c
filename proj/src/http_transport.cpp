#include "httplib.h"

#include "gusnet/http_transport.hpp"

#include <cstdlib>

#include "gusnet/error.hpp"

namespace gusnet {

HttpTransport::HttpTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const auto scheme_end = endpoint_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: " + endpoint_.url);
  }
  const auto path_begin = endpoint_.url.find('/', scheme_end + 3);
  origin_ = endpoint_.url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : endpoint_.url.substr(path_begin);
  if (const char* key = std::getenv(endpoint_.api_key_env.c_str())) api_key_ = key;
  if (endpoint_.require_api_key && api_key_.empty()) {
    throw AuthError("no API key: environment variable " + endpoint_.api_key_env + " is unset", 0);
  }
}

HttpResponse HttpTransport::post(const std::string& request_json) {
  httplib::Client client(origin_);
  client.set_connection_timeout(endpoint_.timeout_seconds, 0);
  client.set_read_timeout(endpoint_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, request_json, "application/json");
  HttpResponse out;
  if (!res) return out;
  out.status = res->status;
  out.body = res->body;
  if (res->has_header("Retry-After")) {
    char* end = nullptr;
    const std::string value = res->get_header_value("Retry-After");
    const double seconds = std::strtod(value.c_str(), &end);
    if (end != value.c_str()) out.retry_after_seconds = seconds;
  }
  return out;
}

}  // namespace gusnet
