#include "tcr/gateway/llm_client.hpp"

#include <chrono>

#include "tcr/common/errors.hpp"
#include "tcr/common/http.hpp"

namespace tcr::gateway {

LlmClient::LlmClient(LlmConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.url) throw ConfigError("llm.url is not configured");
  parse_url(*cfg_.url);
  if (cfg_.timeout_ms <= 0) throw ConfigError("llm.timeout_ms must be positive");
  if (cfg_.max_retries < 0 || cfg_.max_retries > 2) throw ConfigError("llm.max_retries must lie in [0, 2]");
}

std::string LlmClient::request_body(const std::string& model, const std::string& prompt) {
  ojson j;
  j["model"] = model;
  j["messages"] = ojson::array({{{"role", "user"}, {"content", prompt}}});
  return j.dump();
}

std::string LlmClient::parse_response(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw GeneratorUnavailableError("LLM response is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw GeneratorUnavailableError("LLM response content is not a string");
    return content.get<std::string>();
  } catch (const json::exception&) {
    throw GeneratorUnavailableError("LLM response lacks choices[0].message.content");
  }
}

std::string LlmClient::generate(const std::string& prompt) const {
  std::string body = request_body(cfg_.model, prompt);
  std::string last_error;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg_.timeout_ms);
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      if (last_error.empty()) last_error = "LLM request timed out";
      break;
    }
    HttpResult r = http_post_json(*cfg_.url, body, static_cast<int>(left.count()));
    if (r.status == 200) return parse_response(r.body);
    if (r.status == 0) {
      last_error = "LLM request failed: " + r.error;
      continue;
    }
    last_error = "LLM endpoint returned HTTP " + std::to_string(r.status);
    if (r.status < 500) break;
  }
  throw GeneratorUnavailableError(last_error);
}

}  // namespace tcr::gateway
