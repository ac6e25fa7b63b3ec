#pragma once

/// @file http_backend.hpp
/// OpenAI-compatible chat-completions backend. Kept apart from llm_gateway.hpp
/// so that code using only the mock does not pull in httplib.

#include <chrono>
#include <cstdlib>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "kgtopo/error.hpp"
#include "kgtopo/llm_gateway.hpp"

namespace kgtopo {

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{300};
};

/// KGTOPO_API_KEY, falling back to OPENAI_API_KEY; empty when neither is set.
inline std::string api_key_from_env() {
  for (const char* name : {"KGTOPO_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  }
  return {};
}

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(Errc::Config, "base_url needs a scheme: '" + cfg_.base_url + "'");
    }
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    origin_ = cfg_.base_url.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  BackendReply send(const CompletionRequest& request) override {
    httplib::Client client(origin_);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    client.set_write_timeout(cfg_.timeout);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    const nlohmann::json body = {
        {"model", request.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_output_tokens},
    };
    auto res = client.Post(base_path_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw Error(Errc::Transport, "request failed: " + httplib::to_string(res.error()));

    const int status = res->status;
    if (status == 401 || status == 403) throw Error(Errc::Auth, "HTTP " + std::to_string(status));
    if (status == 429) throw Error(Errc::RateLimited, "HTTP 429");
    if (status >= 500) throw Error(Errc::Transport, "HTTP " + std::to_string(status));
    if (status < 200 || status >= 300) {
      throw Error(Errc::BackendRefused, "HTTP " + std::to_string(status) + ": " + res->body);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      BackendReply reply;
      reply.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage") && j["usage"].is_object()) {
        const auto& u = j["usage"];
        reply.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                                 u.value("completion_tokens", std::int64_t{0}),
                                 u.value("total_tokens", std::int64_t{0})};
      }
      return reply;
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::BackendRefused, std::string("unexpected response body: ") + e.what());
    }
  }

  std::string name() const override { return "http:" + cfg_.base_url; }

 private:
  HttpBackendConfig cfg_;
  std::string origin_;
  std::string base_path_;
};

}  // namespace kgtopo
