#pragma once

#include <chrono>
#include <cstdlib>
#include <string>

#include <httplib.h>

#include "postertree/generation.hpp"

namespace postertree {

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail(ErrorCode::kInvalidArgument, "endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

inline HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) fail(ErrorCode::kInvalidArgument, "http backend requires endpoint_url");
  detail::split_url(config_.endpoint_url);
}

inline std::string HttpBackend::complete(const CompletionRequest& request) {
  const auto url = detail::split_url(config_.endpoint_url);
  httplib::Client client(url.origin);
  if (!client.is_valid()) {
    fail(ErrorCode::kBackendUnavailable, "cannot create a client for " + url.origin);
  }
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(config_.timeout_s * 1000));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.api_token_env_var.empty()) {
    if (const char* token = std::getenv(config_.api_token_env_var.c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const std::string body = request_body(config_, request).dump();
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      fail(ErrorCode::kTimeout, "backend request timed out (" + httplib::to_string(err) + ")");
    }
    fail(ErrorCode::kBackendUnavailable, "backend unreachable (" + httplib::to_string(err) + ")");
  }
  if (res->status != 200) {
    fail(ErrorCode::kBackendUnavailable, "backend returned HTTP " + std::to_string(res->status));
  }
  return response_text(res->body);
}

}  // namespace postertree
