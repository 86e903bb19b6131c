#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace graft {

enum class Provider { GENERIC, OPENAI, ANTHROPIC, OLLAMA };

std::string_view to_string(Provider provider);
Provider parse_provider(std::string_view text);

struct EndpointConfig {
  Provider provider = Provider::GENERIC;
  std::string base_url;  // scheme://host[:port]
  std::string path;      // empty: provider default
  std::string model;
  std::string token_env = "GRAFT_LLM_TOKEN";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  double backoff_seconds = 1.0;  // doubled after every failed attempt
  bool offline = false;
};

struct Completion {
  std::string text;
  bool truncated = false;
};

struct CompletionRequest {
  std::string system;
  std::string user;
  double temperature = 0.2;
  int max_tokens = 256;
};

class LlmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual Completion complete(const CompletionRequest& request) = 0;
};

struct HttpRequestSpec {
  std::string path;
  nlohmann::json body;
  std::multimap<std::string, std::string> headers;
};

/// Provider-specific request shape. `token` may be empty.
HttpRequestSpec build_http_request(const EndpointConfig& config, const CompletionRequest& request,
                                   const std::string& token);

/// Extracts the completion text and truncation flag from a provider response.
Completion parse_http_response(Provider provider, const nlohmann::json& response);

/// JSON-over-HTTP client with retries. The token is read from the environment
/// variable named in the config at construction.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(EndpointConfig config);
  Completion complete(const CompletionRequest& request) override;
  int calls_made() const { return calls_; }

 private:
  EndpointConfig config_;
  std::string token_;
  std::atomic<int> calls_{0};
};

}  // namespace graft
