#include "tcr/signals/signals.hpp"

#include <cmath>
#include <regex>

#include "tcr/common/errors.hpp"

namespace tcr::signals {

void ConflictSignals::validate() const {
  if (!std::isfinite(sigma_sem) || !std::isfinite(sigma_fact) || !std::isfinite(sigma_ans))
    throw DomainError("conflict signals must be finite");
  if (sigma_ans < 0.0 || sigma_ans > 1.0) throw DomainError("sigma_ans must lie in [0, 1]");
}

namespace {

void check_dims(const Embedding& q, const Embedding& c, const decoupler::EncoderPair& pair) {
  if (q.dim() != pair.base_dim || c.dim() != pair.base_dim)
    throw DimensionError("signal inputs must have the encoder's base dimension " + std::to_string(pair.base_dim));
}

}  // namespace

double sigma_sem(const Embedding& q, const Embedding& c, const decoupler::EncoderPair& pair) {
  check_dims(q, c, pair);
  return embedkit::cosine(decoupler::forward(pair.sem, embedkit::normalize(q)),
                         decoupler::forward(pair.sem, embedkit::normalize(c)));
}

double sigma_fact(const Embedding& q, const Embedding& c, const decoupler::EncoderPair& pair) {
  check_dims(q, c, pair);
  return embedkit::cosine(decoupler::forward(pair.fact, embedkit::normalize(q)),
                         decoupler::forward(pair.fact, embedkit::normalize(c)));
}

SignalProjector init_projector(std::size_t hidden, std::size_t d_model, Rng& rng, Activation act) {
  if (hidden == 0 || d_model == 0) throw ConfigError("projector dimensions must be positive");
  SignalProjector p;
  p.activation = act;
  p.layer1 = decoupler::ProjectionHead::zeros(3, hidden);
  p.layer2 = decoupler::ProjectionHead::zeros(hidden, d_model);
  double s1 = 1.0 / std::sqrt(3.0), s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : p.layer1.weight) w = rng.normal(0.0, s1);
  for (double& w : p.layer2.weight) w = rng.normal(0.0, s2);
  return p;
}

std::vector<double> project_signals(const std::array<double, 3>& x, const SignalProjector& p,
                                    std::vector<double>* hidden) {
  if (p.layer1.d_in != 3 || p.layer2.d_in != p.layer1.d_out)
    throw DimensionError("signal projector layers are not composable");
  auto h = decoupler::affine(p.layer1, x);
  for (double& v : h) v = p.activation == Activation::tanh ? std::tanh(v) : std::max(0.0, v);
  auto out = decoupler::affine(p.layer2, h);
  if (hidden) *hidden = std::move(h);
  return out;
}

std::vector<double> project_signals(const ConflictSignals& s, const SignalProjector& p) {
  for (double v : {s.sigma_sem, s.sigma_fact, s.sigma_ans})
    if (!std::isfinite(v)) throw DomainError("conflict signals must be finite");
  return project_signals({s.sigma_sem, s.sigma_fact, s.sigma_ans}, p, nullptr);
}

std::vector<std::vector<double>> assemble(const PromptAssembly& p) {
  std::size_t d = p.signal_embedding.size();
  if (d == 0) throw DimensionError("signal embedding is empty");
  std::vector<std::vector<double>> out;
  out.reserve(p.soft_tokens.size() + 1 + p.input_embeddings.size());
  for (const auto& t : p.soft_tokens) {
    if (t.size() != d) throw DimensionError("soft token dimension differs from d_model");
    out.push_back(t);
  }
  out.push_back(p.signal_embedding);
  for (const auto& x : p.input_embeddings) {
    if (x.size() != d) throw DimensionError("input embedding dimension differs from d_model");
    out.push_back(x);
  }
  return out;
}

std::string render_hard_prompt(const ConflictSignals& s, std::string_view template_id) {
  if (template_id != kHardPromptTemplate) throw ConfigError("unknown hard-prompt template '" + std::string(template_id) + "'");
  for (double v : {s.sigma_sem, s.sigma_fact, s.sigma_ans})
    if (!std::isfinite(v)) throw DomainError("conflict signals must be finite");
  return "[conflict-signals] semantic=" + format_fixed(s.sigma_sem, 2) + " factual=" + format_fixed(s.sigma_fact, 2) +
         " answerable=" + format_fixed(s.sigma_ans, 2) +
         " — if factual consistency is low and semantic similarity is high, the context likely conflicts "
         "with known facts.";
}

std::optional<std::array<double, 3>> parse_hard_prompt(std::string_view text) {
  static const std::regex re(R"(\[conflict-signals\] semantic=(-?[0-9]+\.[0-9]+) factual=(-?[0-9]+\.[0-9]+) answerable=(-?[0-9]+\.[0-9]+))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, re)) return std::nullopt;
  return std::array<double, 3>{std::stod(m[1].str()), std::stod(m[2].str()), std::stod(m[3].str())};
}

}  // namespace tcr::signals
