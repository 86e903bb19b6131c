#include "graft/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace graft {

using nlohmann::json;

std::string_view to_string(Provider provider) {
  switch (provider) {
    case Provider::GENERIC:
      return "generic";
    case Provider::OPENAI:
      return "openai";
    case Provider::ANTHROPIC:
      return "anthropic";
    case Provider::OLLAMA:
      return "ollama";
  }
  return "generic";
}

Provider parse_provider(std::string_view text) {
  std::string key(text);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "generic") return Provider::GENERIC;
  if (key == "openai") return Provider::OPENAI;
  if (key == "anthropic") return Provider::ANTHROPIC;
  if (key == "ollama") return Provider::OLLAMA;
  throw std::invalid_argument("unknown provider '" + std::string(text) + "'");
}

HttpRequestSpec build_http_request(const EndpointConfig& config, const CompletionRequest& request,
                                   const std::string& token) {
  HttpRequestSpec spec;
  const json messages = json::array({{{"role", "system"}, {"content", request.system}},
                                     {{"role", "user"}, {"content", request.user}}});
  switch (config.provider) {
    case Provider::GENERIC:
      spec.path = "/v1/generate";
      spec.body = {{"model", config.model},
                   {"system", request.system},
                   {"prompt", request.user},
                   {"temperature", request.temperature},
                   {"max_tokens", request.max_tokens}};
      if (!token.empty()) spec.headers.emplace("Authorization", "Bearer " + token);
      break;
    case Provider::OPENAI:
      spec.path = "/v1/chat/completions";
      spec.body = {{"model", config.model},
                   {"messages", messages},
                   {"temperature", request.temperature},
                   {"max_tokens", request.max_tokens}};
      if (!token.empty()) spec.headers.emplace("Authorization", "Bearer " + token);
      break;
    case Provider::ANTHROPIC:
      spec.path = "/v1/messages";
      spec.body = {{"model", config.model},
                   {"system", request.system},
                   {"messages", json::array({{{"role", "user"}, {"content", request.user}}})},
                   {"temperature", request.temperature},
                   {"max_tokens", request.max_tokens}};
      if (!token.empty()) spec.headers.emplace("x-api-key", token);
      spec.headers.emplace("anthropic-version", "2023-06-01");
      break;
    case Provider::OLLAMA:
      spec.path = "/api/chat";
      spec.body = {{"model", config.model},
                   {"messages", messages},
                   {"stream", false},
                   {"options", {{"temperature", request.temperature}, {"num_predict", request.max_tokens}}}};
      break;
  }
  if (!config.path.empty()) spec.path = config.path;
  return spec;
}

Completion parse_http_response(Provider provider, const json& response) {
  Completion out;
  try {
    switch (provider) {
      case Provider::GENERIC:
        out.text = response.at("text").get<std::string>();
        out.truncated = response.value("truncated", false);
        break;
      case Provider::OPENAI: {
        const auto& choice = response.at("choices").at(0);
        out.text = choice.at("message").at("content").get<std::string>();
        out.truncated = choice.value("finish_reason", "") == "length";
        break;
      }
      case Provider::ANTHROPIC:
        for (const auto& block : response.at("content")) {
          if (block.value("type", "text") == "text") out.text += block.at("text").get<std::string>();
        }
        out.truncated = response.value("stop_reason", "") == "max_tokens";
        break;
      case Provider::OLLAMA:
        out.text = response.at("message").at("content").get<std::string>();
        out.truncated = response.value("done_reason", "") == "length";
        break;
    }
  } catch (const json::exception& e) {
    throw LlmError(std::string("malformed ") + std::string(to_string(provider)) + " response: " + e.what());
  }
  return out;
}

HttpLlmClient::HttpLlmClient(EndpointConfig config) : config_(std::move(config)) {
  if (config_.offline) throw LlmError("HttpLlmClient constructed in offline mode");
  if (config_.base_url.empty()) throw LlmError("endpoint base_url is empty");
  if (!config_.token_env.empty()) {
    if (const char* value = std::getenv(config_.token_env.c_str())) token_ = value;
  }
}

Completion HttpLlmClient::complete(const CompletionRequest& request) {
  const HttpRequestSpec spec = build_http_request(config_, request, token_);
  httplib::Headers headers(spec.headers.begin(), spec.headers.end());
  const std::string body = spec.body.dump();

  httplib::Client client(config_.base_url);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());

  std::string last_error;
  double backoff = config_.backoff_seconds;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && backoff > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    ++calls_;
    auto result = client.Post(spec.path, headers, body, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status < 200 || result->status >= 300) {
      throw LlmError("HTTP " + std::to_string(result->status) + " from " + config_.base_url + spec.path);
    }
    json parsed = json::parse(result->body, nullptr, false);
    if (parsed.is_discarded()) throw LlmError("response is not JSON");
    return parse_http_response(config_.provider, parsed);
  }
  throw LlmError("request failed after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace graft
