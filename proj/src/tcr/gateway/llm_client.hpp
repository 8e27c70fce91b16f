#pragma once

#include <string>

#include "tcr/gateway/config.hpp"
#include "tcr/signals/answerability.hpp"

namespace tcr::gateway {

// Chat-completions style client: POST {model, messages:[{role:"user", content}]}
// and return choices[0].message.content. Transport failures and 5xx replies are
// retried at most max_retries times within one timeout_ms budget; every failure
// surfaces as GeneratorUnavailableError.
class LlmClient : public signals::TextGenerator {
 public:
  explicit LlmClient(LlmConfig cfg);
  std::string generate(const std::string& prompt) const override;

  static std::string request_body(const std::string& model, const std::string& prompt);
  static std::string parse_response(const std::string& body);

 private:
  LlmConfig cfg_;
};

}  // namespace tcr::gateway
