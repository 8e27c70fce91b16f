#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcr/common/io.hpp"
#include "tcr/signals/signals.hpp"

namespace tcr::policy {

using signals::ConflictSignals;

enum class Verdict { TrustMemory, TrustContext, FlagConflict };
enum class Region { ConflictZone, AlignedZone, UnrelatedZone };
enum class AnsBin { Low, Mid, High };

const char* to_string(Verdict v);
const char* to_string(Region r);
const char* to_string(AnsBin b);
std::optional<Verdict> verdict_from_string(std::string_view s);
std::optional<Region> region_from_string(std::string_view s);
std::optional<AnsBin> ans_bin_from_string(std::string_view s);

struct PolicyConfig {
  double sem_threshold = 0.65;
  double fact_threshold = 0.40;
  double ans_high = 0.7;
  double ans_low = 0.3;
  int early_stop_step = 10;

  void validate() const;
};

ojson thresholds_to_json(const PolicyConfig& cfg);

struct Decision {
  Verdict verdict = Verdict::TrustMemory;
  Region region = Region::UnrelatedZone;
  AnsBin ans_bin = AnsBin::Low;
  std::string rationale;
};

Region classify_region(double sigma_sem, double sigma_fact, const PolicyConfig& cfg);
AnsBin bin_answerability(double sigma_ans, const PolicyConfig& cfg);
Decision decide(const ConflictSignals& s, const PolicyConfig& cfg);

// Recovers the verdict named at the end of a rationale ("... -> <verdict>").
std::optional<Verdict> verdict_from_rationale(std::string_view rationale);

// Positive inside the conflict zone, zero on its boundary.
double conflict_score(double sigma_sem, double sigma_fact, const PolicyConfig& cfg);

// Steps are 1-based: steps[0] is decoding step 1.
struct SignalTrajectory {
  std::vector<ConflictSignals> steps;
};

bool early_success_predict(const SignalTrajectory& t, const PolicyConfig& cfg);

struct FlipObservation {
  Decision decision;
  bool parametric_answer_used = true;
};

// Per populated bin: share of verdicts that are TrustContext/FlagConflict and
// did not keep the parametric answer.
std::map<AnsBin, double> flip_rate(std::span<const FlipObservation> obs);

ojson decision_log_entry(const std::string& query_id, const Decision& d, const PolicyConfig& cfg);

}  // namespace tcr::policy
