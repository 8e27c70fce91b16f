#include "tcr/gateway/pipeline.hpp"

#include <cmath>

#include "tcr/common/errors.hpp"
#include "tcr/decoupler/checkpoint.hpp"
#include "tcr/eval/benchmark.hpp"

namespace tcr::gateway {

std::shared_ptr<const ModelState> load_model(const std::string& checkpoint_bytes, const embedkit::EmbedConfig& base) {
  auto m = std::make_shared<ModelState>();
  m->pair = decoupler::deserialize_checkpoint(checkpoint_bytes);
  m->checkpoint_hash = sha256_hex(checkpoint_bytes);
  m->embed = eval::embed_config_for(m->pair, base);
  return m;
}

std::shared_ptr<const ModelState> load_model_file(const std::string& path, const embedkit::EmbedConfig& base) {
  return load_model(read_file(path), base);
}

std::string default_query_id(const std::string& query) { return "q-" + sha256_hex(query).substr(0, 12); }

namespace {

AnsEstimate estimate(const SignalRequest& req, const AppConfig& cfg, const signals::TextGenerator* gen,
                     bool skip_llm) {
  AnsEstimate out;
  if (req.sigma_ans) {
    if (!(*req.sigma_ans >= 0.0 && *req.sigma_ans <= 1.0)) throw DomainError("sigma_ans must lie in [0, 1]");
    out.value = *req.sigma_ans;
    out.source = "request";
    return out;
  }
  const auto& ac = cfg.answerability;
  if (ac.mode == AnswerabilityMode::llm_probe && gen && !skip_llm) {
    signals::LlmProbe probe(*gen);
    probe.calibration = ac.calibration;
    try {
      out.value = signals::sigma_ans({req.query_id, req.query, req.closed_book_correct}, probe);
      out.source = "llm-probe";
      return out;
    } catch (const ProviderError&) {
      out.llm_failed = true;
    }
  }
  if (req.closed_book_correct) {
    signals::SyntheticOracle oracle(ac.oracle);
    oracle.calibration = ac.calibration;
    out.value = signals::sigma_ans({req.query_id, req.query, req.closed_book_correct}, oracle);
    out.source = "synthetic-oracle";
    return out;
  }
  out.value = ac.prior;
  out.source = "prior";
  return out;
}

}  // namespace

AnsEstimate estimate_answerability(const SignalRequest& req, const AppConfig& cfg, const signals::TextGenerator* gen) {
  return estimate(req, cfg, gen, false);
}

std::vector<SignalOutcome> compute_signals(const ModelState& model, const AppConfig& cfg,
                                           const signals::TextGenerator* gen, const std::vector<SignalRequest>& reqs) {
  if (reqs.empty()) throw EmptyInputError("no signal requests");
  std::vector<std::string> texts;
  texts.reserve(2 * reqs.size());
  for (const auto& r : reqs) {
    if (r.query.empty()) throw FormatError("query must be a non-empty string");
    if (r.context.empty()) throw FormatError("context must be a non-empty string");
    texts.push_back(r.query);
    texts.push_back(r.context);
  }
  auto embs = embedkit::embed_batch(texts, model.embed);
  std::vector<SignalOutcome> out;
  out.reserve(reqs.size());
  bool llm_down = false;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    SignalOutcome o;
    o.signals.query_id = reqs[i].query_id.empty() ? default_query_id(reqs[i].query) : reqs[i].query_id;
    o.signals.sigma_sem = signals::sigma_sem(embs[2 * i], embs[2 * i + 1], model.pair);
    o.signals.sigma_fact = signals::sigma_fact(embs[2 * i], embs[2 * i + 1], model.pair);
    SignalRequest keyed = reqs[i];
    keyed.query_id = o.signals.query_id;
    AnsEstimate a = estimate(keyed, cfg, gen, llm_down);
    llm_down = llm_down || a.llm_failed;
    o.signals.sigma_ans = a.value;
    o.sigma_ans_source = a.source;
    o.llm_failed = a.llm_failed;
    out.push_back(std::move(o));
  }
  return out;
}

SignalRequest signal_request_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("signal request must be a JSON object");
  auto str = [&](std::initializer_list<const char*> keys, bool required) -> std::string {
    for (const char* k : keys) {
      auto it = j.find(k);
      if (it == j.end()) continue;
      if (!it->is_string()) throw FormatError(std::string("field '") + k + "' must be a string");
      return it->get<std::string>();
    }
    if (required) throw FormatError(std::string("missing field '") + *keys.begin() + "'");
    return {};
  };
  SignalRequest r;
  r.query_id = str({"query_id", "id"}, false);
  r.query = str({"query", "question"}, true);
  r.context = str({"context"}, true);
  if (auto it = j.find("sigma_ans"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw FormatError("field 'sigma_ans' must be a number");
    r.sigma_ans = it->get<double>();
    if (!(*r.sigma_ans >= 0.0 && *r.sigma_ans <= 1.0)) throw DomainError("sigma_ans must lie in [0, 1]");
  }
  if (auto it = j.find("closed_book_correct"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) throw FormatError("field 'closed_book_correct' must be a boolean");
    r.closed_book_correct = it->get<bool>();
  }
  return r;
}

std::string signals_batch(const ModelState& model, const AppConfig& cfg, const signals::TextGenerator* gen,
                          const std::vector<std::string>& lines) {
  std::vector<SignalRequest> reqs;
  reqs.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json j = json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) throw FormatError("line " + std::to_string(i + 1) + ": invalid JSON");
    try {
      reqs.push_back(signal_request_from_json(j));
    } catch (const Error& e) {
      throw FormatError("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  std::string out;
  for (const auto& o : compute_signals(model, cfg, gen, reqs)) {
    ojson j = signals_to_json(o.signals);
    j["sigma_ans_source"] = o.sigma_ans_source;
    out += dump_fixed(j) + "\n";
  }
  return out;
}

ojson signals_to_json(const signals::ConflictSignals& s) {
  ojson j;
  j["query_id"] = s.query_id;
  j["sigma_sem"] = s.sigma_sem;
  j["sigma_fact"] = s.sigma_fact;
  j["sigma_ans"] = s.sigma_ans;
  return j;
}

ojson decision_to_json(const policy::Decision& d) {
  ojson j;
  j["verdict"] = policy::to_string(d.verdict);
  j["region"] = policy::to_string(d.region);
  j["ans_bin"] = policy::to_string(d.ans_bin);
  j["rationale"] = d.rationale;
  return j;
}

std::string generation_prompt(const std::string& hard_prompt, const std::string& query, const std::string& context) {
  return hard_prompt + "\n\nContext: " + context + "\nQuestion: " + query + "\nAnswer:";
}

}  // namespace tcr::gateway
