#include <httplib.h>

#include <cstdlib>

#include "rxn/interpret.hpp"

namespace rxn::interpret {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw Error(ErrorCode::InvalidArgument, "language-model endpoint must be an http:// URL: '" + url + "'");
  }
  const auto slash = url.find('/', scheme.size());
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpClient::HttpClient(std::string endpoint, std::string token)
    : endpoint_(std::move(endpoint)), token_(std::move(token)) {
  split_endpoint(endpoint_);
}

std::string HttpClient::complete(const std::string& prompt_json) {
  const auto ep = split_endpoint(endpoint_);
  httplib::Client cli(ep.base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  std::string last;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    auto res = cli.Post(ep.path, headers, prompt_json, "application/json");
    if (!res) {
      last = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last = "HTTP status " + std::to_string(res->status);
    if (res->status < 500) break;
  }
  throw Error(ErrorCode::Io, "language-model endpoint " + endpoint_ + ": " + last);
}

std::unique_ptr<LlmClient> client_from_environment() {
  const char* endpoint = std::getenv("RXN_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) return std::make_unique<StubClient>();
  const char* token = std::getenv("RXN_LLM_TOKEN");
  return std::make_unique<HttpClient>(endpoint, token ? token : "");
}

}  // namespace rxn::interpret
