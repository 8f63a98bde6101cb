#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <mutex>
#include <string>

#include "designer/gateway.hpp"

namespace designer {

/// OpenAI-compatible transport over cpp-httplib. The bearer token is read
/// from the environment variable named in the provider config.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const ProviderConfig& config) : timeout_seconds_(config.timeout_seconds) {
    const auto& url = config.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::invalid_argument, "base_url lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (const char* key = std::getenv(config.api_key_env_name.c_str())) api_key_ = key;
  }

  HttpResponse post(const std::string& path, const std::string& body) override {
    // httplib::Client is not thread-safe; one client per call keeps calls independent.
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(timeout_seconds_);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(prefix_ + path, headers, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }

  const std::string& origin() const noexcept { return origin_; }
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  std::string origin_;
  std::string prefix_;
  std::string api_key_;
  double timeout_seconds_;
};

}  // namespace designer
