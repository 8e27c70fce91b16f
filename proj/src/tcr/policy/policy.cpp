#include "tcr/policy/policy.hpp"

#include <cmath>

#include "tcr/common/errors.hpp"

namespace tcr::policy {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::TrustMemory: return "TrustMemory";
    case Verdict::TrustContext: return "TrustContext";
    case Verdict::FlagConflict: return "FlagConflict";
  }
  return "unknown";
}

const char* to_string(Region r) {
  switch (r) {
    case Region::ConflictZone: return "ConflictZone";
    case Region::AlignedZone: return "AlignedZone";
    case Region::UnrelatedZone: return "UnrelatedZone";
  }
  return "unknown";
}

const char* to_string(AnsBin b) {
  switch (b) {
    case AnsBin::Low: return "Low";
    case AnsBin::Mid: return "Mid";
    case AnsBin::High: return "High";
  }
  return "unknown";
}

std::optional<Verdict> verdict_from_string(std::string_view s) {
  for (Verdict v : {Verdict::TrustMemory, Verdict::TrustContext, Verdict::FlagConflict})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

std::optional<Region> region_from_string(std::string_view s) {
  for (Region r : {Region::ConflictZone, Region::AlignedZone, Region::UnrelatedZone})
    if (s == to_string(r)) return r;
  return std::nullopt;
}

std::optional<AnsBin> ans_bin_from_string(std::string_view s) {
  for (AnsBin b : {AnsBin::Low, AnsBin::Mid, AnsBin::High})
    if (s == to_string(b)) return b;
  return std::nullopt;
}

void PolicyConfig::validate() const {
  for (double t : {sem_threshold, fact_threshold, ans_high, ans_low})
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("policy thresholds must lie in [0, 1]");
  if (!(ans_low < ans_high)) throw ConfigError("ans_low must be below ans_high");
  if (early_stop_step < 1) throw ConfigError("early_stop_step must be >= 1");
}

ojson thresholds_to_json(const PolicyConfig& cfg) {
  ojson j;
  j["sem_threshold"] = cfg.sem_threshold;
  j["fact_threshold"] = cfg.fact_threshold;
  j["ans_high"] = cfg.ans_high;
  j["ans_low"] = cfg.ans_low;
  j["early_stop_step"] = cfg.early_stop_step;
  return j;
}

Region classify_region(double sigma_sem, double sigma_fact, const PolicyConfig& cfg) {
  if (sigma_sem > cfg.sem_threshold)
    return sigma_fact < cfg.fact_threshold ? Region::ConflictZone : Region::AlignedZone;
  return Region::UnrelatedZone;
}

AnsBin bin_answerability(double sigma_ans, const PolicyConfig& cfg) {
  if (!(sigma_ans >= 0.0 && sigma_ans <= 1.0)) throw DomainError("sigma_ans must lie in [0, 1]");
  if (sigma_ans >= cfg.ans_high) return AnsBin::High;
  if (sigma_ans >= cfg.ans_low) return AnsBin::Mid;
  return AnsBin::Low;
}

namespace {

std::string cmp(const char* name, double value, const char* op, const char* threshold_name, double threshold) {
  return std::string(name) + "=" + format_fixed(value, 6) + " " + op + " " + threshold_name + "=" +
         format_fixed(threshold, 6);
}

}  // namespace

Decision decide(const ConflictSignals& s, const PolicyConfig& cfg) {
  for (double v : {s.sigma_sem, s.sigma_fact, s.sigma_ans})
    if (!std::isfinite(v)) throw DomainError("conflict signals must be finite");
  Decision d;
  d.ans_bin = bin_answerability(s.sigma_ans, cfg);
  d.region = classify_region(s.sigma_sem, s.sigma_fact, cfg);
  if (s.sigma_ans > cfg.ans_high) {
    d.verdict = Verdict::TrustMemory;
    d.rationale = cmp("sigma_ans", s.sigma_ans, ">", "ans_high", cfg.ans_high) + ": answerable from memory -> " +
                  to_string(d.verdict);
    return d;
  }
  std::string r = cmp("sigma_ans", s.sigma_ans, "<=", "ans_high", cfg.ans_high) + "; ";
  if (d.region == Region::UnrelatedZone) {
    d.verdict = Verdict::TrustMemory;
    r += cmp("sigma_sem", s.sigma_sem, "<=", "sem_threshold", cfg.sem_threshold) + ": context unrelated";
  } else {
    r += cmp("sigma_sem", s.sigma_sem, ">", "sem_threshold", cfg.sem_threshold) + "; ";
    if (d.region == Region::ConflictZone) {
      d.verdict = Verdict::FlagConflict;
      r += cmp("sigma_fact", s.sigma_fact, "<", "fact_threshold", cfg.fact_threshold) + ": context conflicts";
    } else {
      d.verdict = Verdict::TrustContext;
      r += cmp("sigma_fact", s.sigma_fact, ">=", "fact_threshold", cfg.fact_threshold) + ": context aligned";
    }
  }
  d.rationale = r + " -> " + to_string(d.verdict);
  return d;
}

std::optional<Verdict> verdict_from_rationale(std::string_view rationale) {
  auto pos = rationale.rfind(" -> ");
  if (pos == std::string_view::npos) return std::nullopt;
  return verdict_from_string(rationale.substr(pos + 4));
}

double conflict_score(double sigma_sem, double sigma_fact, const PolicyConfig& cfg) {
  return std::min(sigma_sem - cfg.sem_threshold, cfg.fact_threshold - sigma_fact);
}

bool early_success_predict(const SignalTrajectory& t, const PolicyConfig& cfg) {
  if (t.steps.empty()) throw EmptyInputError("trajectory has no steps");
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    int step = static_cast<int>(i) + 1;
    if (step >= cfg.early_stop_step) break;
    if (t.steps[i].sigma_fact > t.steps[i].sigma_ans) return true;
  }
  return false;
}

std::map<AnsBin, double> flip_rate(std::span<const FlipObservation> obs) {
  if (obs.empty()) throw EmptyInputError("flip_rate needs at least one decision");
  std::map<AnsBin, std::pair<std::size_t, std::size_t>> tally;
  for (const auto& o : obs) {
    auto& [flips, total] = tally[o.decision.ans_bin];
    ++total;
    if (o.decision.verdict != Verdict::TrustMemory && !o.parametric_answer_used) ++flips;
  }
  std::map<AnsBin, double> out;
  for (const auto& [bin, ft] : tally) out[bin] = static_cast<double>(ft.first) / static_cast<double>(ft.second);
  return out;
}

ojson decision_log_entry(const std::string& query_id, const Decision& d, const PolicyConfig& cfg) {
  ojson j;
  j["query_id"] = query_id;
  j["verdict"] = to_string(d.verdict);
  j["region"] = to_string(d.region);
  j["ans_bin"] = to_string(d.ans_bin);
  j["thresholds"] = thresholds_to_json(cfg);
  j["rationale"] = d.rationale;
  return j;
}

}  // namespace tcr::policy
