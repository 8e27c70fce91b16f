#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "tcr/common/io.hpp"
#include "tcr/datagen/datagen.hpp"
#include "tcr/decoupler/probe.hpp"
#include "tcr/decoupler/trainer.hpp"
#include "tcr/embedkit/embedding.hpp"
#include "tcr/policy/policy.hpp"
#include "tcr/signals/answerability.hpp"
#include "tcr/weighting/weighting.hpp"

namespace tcr::gateway {

struct DatagenConfig {
  std::size_t n_triples = 2000;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  datagen::QaOptions qa;
};

enum class AnswerabilityMode { synthetic_oracle, llm_probe };

struct AnswerabilityConfig {
  AnswerabilityMode mode = AnswerabilityMode::synthetic_oracle;
  signals::OracleConfig oracle;
  double prior = 0.5;  // used when no estimate is available
  std::optional<signals::Calibration> calibration;
};

struct LlmConfig {
  std::optional<std::string> url;
  std::string model = "tcr-generator";
  int timeout_ms = 10000;
  int max_retries = 2;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> checkpoint_path;
  int request_timeout_ms = 10000;
};

struct TheoryConfig {
  std::uint64_t n_trials = 200000;
};

// Every section reads its seed from AppConfig::seed.
struct AppConfig {
  std::uint64_t seed = 42;
  embedkit::EmbedConfig embed;
  DatagenConfig datagen;
  decoupler::TrainConfig train;
  decoupler::ProbeConfig probe;
  policy::PolicyConfig policy;
  AnswerabilityConfig answerability;
  LlmConfig llm;
  ServerConfig server;
  weighting::SurrogateConfig surrogate;
  TheoryConfig theory;

  void validate() const;
  // Copies the top-level seed into the per-stage configs.
  void propagate_seed();
};

const char* to_string(AnswerabilityMode m);

// Unknown keys and wrongly typed values raise ConfigError naming the key path.
AppConfig config_from_json(const json& j);
AppConfig load_config(const std::string& path);
ojson config_to_json(const AppConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// TCR_EMBED_URL and TCR_LLM_URL; an empty value clears the URL.
void apply_env_overrides(AppConfig& cfg, const EnvLookup& env = process_env);

}  // namespace tcr::gateway
