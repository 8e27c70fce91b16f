#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tcr/decoupler/trainer.hpp"

namespace tcr::signals {

using embedkit::Embedding;

struct ConflictSignals {
  double sigma_sem = 0.0;
  double sigma_fact = 0.0;
  double sigma_ans = 0.0;
  std::string query_id;

  void validate() const;
};

double sigma_sem(const Embedding& q, const Embedding& c, const decoupler::EncoderPair& pair);
double sigma_fact(const Embedding& q, const Embedding& c, const decoupler::EncoderPair& pair);

enum class Activation { tanh, relu };

struct SignalProjector {
  decoupler::ProjectionHead layer1;  // 3 -> h
  decoupler::ProjectionHead layer2;  // h -> d_model
  Activation activation = Activation::tanh;

  std::size_t hidden() const { return layer1.d_out; }
  std::size_t d_model() const { return layer2.d_out; }
};

// Seeded projector 3 -> hidden -> d_model. Layer shapes are stored d_in x d_out;
// the d_out <= d_in head invariant does not apply to this expanding MLP.
SignalProjector init_projector(std::size_t hidden, std::size_t d_model, Rng& rng,
                               Activation act = Activation::tanh);

std::vector<double> project_signals(const ConflictSignals& s, const SignalProjector& p);
// Hidden activations and output; used by the surrogate trainer.
std::vector<double> project_signals(const std::array<double, 3>& x, const SignalProjector& p,
                                    std::vector<double>* hidden);

struct PromptAssembly {
  std::vector<std::vector<double>> soft_tokens;
  std::vector<double> signal_embedding;
  std::vector<std::vector<double>> input_embeddings;
};

inline constexpr std::size_t kDefaultSoftTokens = 20;

std::vector<std::vector<double>> assemble(const PromptAssembly& p);

inline constexpr std::string_view kHardPromptTemplate = "v1";

std::string render_hard_prompt(const ConflictSignals& s, std::string_view template_id = kHardPromptTemplate);
std::optional<std::array<double, 3>> parse_hard_prompt(std::string_view text);

}  // namespace tcr::signals
