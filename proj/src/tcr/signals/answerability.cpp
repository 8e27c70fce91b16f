#include "tcr/signals/answerability.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"

namespace tcr::signals {

void Calibration::validate() const {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError("calibration needs at least two (x, y) knots");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw ConfigError("calibration knots must have increasing x");
    if (ys[i] < ys[i - 1]) throw ConfigError("calibration must be monotone non-decreasing");
  }
}

double Calibration::apply(double x) const {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

double AnswerabilityProvider::estimate(const AnswerabilityQuery& q) const {
  double v = raw_estimate(q);
  if (std::isnan(v)) throw ProviderError("answerability provider returned NaN");
  if (calibration) v = calibration->apply(v);
  return std::clamp(v, 0.0, 1.0);
}

SyntheticOracle::SyntheticOracle(OracleConfig cfg) : cfg_(cfg) {
  if (!(cfg_.noise >= 0.0)) throw ConfigError("oracle noise must be non-negative");
}

double SyntheticOracle::raw_estimate(const AnswerabilityQuery& q) const {
  if (!q.closed_book_correct) throw ProviderError("synthetic oracle needs closed_book_correct for '" + q.query_id + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : q.query_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  Rng rng(derive_seed(cfg_.seed, 0x616e73, h));
  double base = *q.closed_book_correct ? cfg_.base_known : cfg_.base_unknown;
  return base + cfg_.noise * rng.normal();
}

std::string LlmProbe::probe_prompt(const std::string& question) {
  return "Can you answer the following question correctly from your own knowledge, without any additional "
         "context? Reply with yes or no, optionally followed by a confidence between 0 and 1.\nQuestion: " +
         question;
}

std::optional<double> LlmProbe::parse_reply(const std::string& reply) {
  static const std::regex re(R"(^\W*(yes|no)\b[^0-9]*([0-9]*\.?[0-9]+)?)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(reply, m, re)) return std::nullopt;
  std::string word = m[1].str();
  std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
  double conf = 1.0;
  if (m[2].matched) {
    conf = std::stod(m[2].str());
    if (conf > 1.0) conf = 1.0;
  }
  return word == "yes" ? conf : 1.0 - conf;
}

double LlmProbe::raw_estimate(const AnswerabilityQuery& q) const {
  std::string reply;
  try {
    reply = gen_.generate(probe_prompt(q.question));
  } catch (const GeneratorUnavailableError& e) {
    throw ProviderError(std::string("llm-probe unavailable: ") + e.what());
  }
  auto v = parse_reply(reply);
  if (!v) throw ProviderError("llm-probe reply is not a yes/no answer");
  return *v;
}

double sigma_ans(const AnswerabilityQuery& q, const AnswerabilityProvider& provider) { return provider.estimate(q); }

}  // namespace tcr::signals
