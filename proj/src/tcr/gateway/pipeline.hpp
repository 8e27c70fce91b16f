#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tcr/decoupler/trainer.hpp"
#include "tcr/gateway/config.hpp"
#include "tcr/signals/signals.hpp"

namespace tcr::gateway {

// Immutable after construction; shared across request threads.
struct ModelState {
  decoupler::EncoderPair pair;
  std::string checkpoint_hash;
  embedkit::EmbedConfig embed;
};

std::shared_ptr<const ModelState> load_model(const std::string& checkpoint_bytes, const embedkit::EmbedConfig& base);
std::shared_ptr<const ModelState> load_model_file(const std::string& path, const embedkit::EmbedConfig& base);

struct SignalRequest {
  std::string query_id;
  std::string query;
  std::string context;
  std::optional<double> sigma_ans;
  std::optional<bool> closed_book_correct;
};

// "q-" followed by the first 12 hex digits of SHA-256(query).
std::string default_query_id(const std::string& query);

struct AnsEstimate {
  double value = 0.0;
  std::string source;  // request, llm-probe, synthetic-oracle, prior
  bool llm_failed = false;
};

// Precedence: explicit value, llm-probe (when configured and reachable),
// synthetic oracle (when closed_book_correct is known), configured prior.
AnsEstimate estimate_answerability(const SignalRequest& req, const AppConfig& cfg, const signals::TextGenerator* gen);

struct SignalOutcome {
  signals::ConflictSignals signals;
  std::string sigma_ans_source;
  bool llm_failed = false;
};

std::vector<SignalOutcome> compute_signals(const ModelState& model, const AppConfig& cfg,
                                           const signals::TextGenerator* gen, const std::vector<SignalRequest>& reqs);

// Accepts {query_id|id, query|question, context, sigma_ans?, closed_book_correct?}.
SignalRequest signal_request_from_json(const json& j);

// JSONL in, JSONL out: {query_id, sigma_sem, sigma_fact, sigma_ans, sigma_ans_source}.
std::string signals_batch(const ModelState& model, const AppConfig& cfg, const signals::TextGenerator* gen,
                          const std::vector<std::string>& lines);

ojson signals_to_json(const signals::ConflictSignals& s);
ojson decision_to_json(const policy::Decision& d);

std::string generation_prompt(const std::string& hard_prompt, const std::string& query, const std::string& context);

}  // namespace tcr::gateway
