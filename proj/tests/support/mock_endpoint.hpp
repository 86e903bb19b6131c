#pragma once

#include "graft/llm_client.hpp"

#include <httplib.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace graft::test {

/// Local endpoint speaking the generic /v1/generate protocol. Replies come
/// from `reply(prompt)`; the first `failures` requests get HTTP 503.
class MockEndpoint {
 public:
  explicit MockEndpoint(std::function<std::string(const std::string&)> reply, int failures = 0)
      : reply_(std::move(reply)), failures_(failures) {
    server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (failures_-- > 0) {
        res.status = 503;
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(body);
      }
      res.set_content(nlohmann::json{{"text", reply_(body.at("prompt").get<std::string>())}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  MockEndpoint(const MockEndpoint&) = delete;
  MockEndpoint& operator=(const MockEndpoint&) = delete;
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  EndpointConfig config() const {
    EndpointConfig c;
    c.base_url = base_url();
    c.model = "mock";
    c.backoff_seconds = 0.0;
    c.timeout_seconds = 5.0;
    return c;
  }
  int requests() const { return requests_; }
  std::vector<nlohmann::json> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }

 private:
  httplib::Server server_;
  std::function<std::string(const std::string&)> reply_;
  std::atomic<int> failures_;
  std::atomic<int> requests_{0};
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> bodies_;
};

inline bool is_refinement_prompt(const std::string& prompt) {
  return prompt.rfind("Here is a natural language rule", 0) == 0;
}

}  // namespace graft::test
