#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcr/common/io.hpp"
#include "tcr/datagen/datagen.hpp"
#include "tcr/decoupler/trainer.hpp"
#include "tcr/eval/metrics.hpp"
#include "tcr/policy/policy.hpp"
#include "tcr/signals/answerability.hpp"
#include "tcr/weighting/weighting.hpp"

namespace tcr::eval {

// Checkpoint metadata decides the hash-embedding dim and seed unless a remote
// embedding URL is configured.
embedkit::EmbedConfig embed_config_for(const decoupler::EncoderPair& pair, const embedkit::EmbedConfig& base);

// What a context asserts about a (subject, relation) key.
struct ContextReading {
  bool relevant = false;
  bool negated = false;
  std::string object;
};

ContextReading read_context(const std::string& context, const std::string& subject, datagen::Relation relation);

struct BenchmarkConfig {
  policy::PolicyConfig policy;
  signals::OracleConfig oracle;
  embedkit::EmbedConfig embed;
  std::uint64_t seed = 42;
  bool run_surrogate = false;
  weighting::SurrogateConfig surrogate;
};

struct CaseResult {
  std::string id;
  signals::ConflictSignals signals;
  policy::Decision decision;
  std::string context_answer;
  std::string final_answer;
  bool parametric_answer_used = true;
  OutcomeCase outcome;
  OutcomeCase always_context;
  OutcomeCase closed_book;
  DetectionRecord detection;
  double em = 0.0, f1 = 0.0;
};

struct BenchmarkResult {
  std::vector<CaseResult> cases;
  ojson report;
  std::string csv;
  std::optional<weighting::SurrogateResult> surrogate;
};

BenchmarkResult run_benchmark(const std::vector<datagen::QACase>& cases, const decoupler::EncoderPair& pair,
                              const BenchmarkConfig& cfg, const std::string& checkpoint_hash);

BenchmarkResult run_benchmark_files(const std::string& qa_path, const std::string& checkpoint_path,
                                    const BenchmarkConfig& cfg);

// Triple-level detection: (statement, contradiction) pairs are positives,
// (statement, paraphrase) and (statement, unrelated) negatives.
struct DetectionEval {
  std::vector<DetectionRecord> records;
  double f1_at_rule = 0.0;  // region rule, i.e. conflict_score >= 0
  double auroc = 0.0;
  ThresholdSweep sweep;
  std::array<double, 3> mean_sem{};   // para, conf, irr
  std::array<double, 3> mean_fact{};
  std::size_t n_triples = 0;

  double sem_margin() const { return mean_sem[1] - mean_sem[2]; }
  double fact_margin() const { return mean_fact[0] - mean_fact[1]; }
};

DetectionEval evaluate_detection(const datagen::TripleSet& ts, const decoupler::EncoderPair& pair,
                                 const embedkit::EmbedConfig& embed, const policy::PolicyConfig& policy,
                                 std::optional<datagen::Split> split);

ojson detection_to_json(const DetectionEval& d);

}  // namespace tcr::eval
