#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tcr::signals {

struct AnswerabilityQuery {
  std::string query_id;
  std::string question;
  std::optional<bool> closed_book_correct;
};

// Monotone piecewise-linear map; knots must be non-decreasing in both x and y.
struct Calibration {
  std::vector<double> xs;
  std::vector<double> ys;

  void validate() const;
  double apply(double x) const;
};

class AnswerabilityProvider {
 public:
  virtual ~AnswerabilityProvider() = default;
  virtual const char* mode() const = 0;
  virtual double raw_estimate(const AnswerabilityQuery& q) const = 0;

  // Calibrated and clamped to [0, 1].
  double estimate(const AnswerabilityQuery& q) const;

  std::optional<Calibration> calibration;
};

struct OracleConfig {
  double base_known = 0.85;
  double base_unknown = 0.15;
  double noise = 0.15;
  std::uint64_t seed = 42;
};

// Seeded stand-in for a model's self-answerability: centred on base_known or
// base_unknown depending on closed_book_correct, with Gaussian noise keyed by
// (seed, query_id).
class SyntheticOracle : public AnswerabilityProvider {
 public:
  explicit SyntheticOracle(OracleConfig cfg);
  const char* mode() const override { return "synthetic-oracle"; }
  double raw_estimate(const AnswerabilityQuery& q) const override;

 private:
  OracleConfig cfg_;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt) const = 0;
};

// Asks a fixed yes/no question and maps the reply (optionally carrying a
// confidence) to [0, 1]: yes -> c, no -> 1 - c, c defaults to 1.
class LlmProbe : public AnswerabilityProvider {
 public:
  explicit LlmProbe(const TextGenerator& gen) : gen_(gen) {}
  const char* mode() const override { return "llm-probe"; }
  double raw_estimate(const AnswerabilityQuery& q) const override;

  static std::string probe_prompt(const std::string& question);
  static std::optional<double> parse_reply(const std::string& reply);

 private:
  const TextGenerator& gen_;
};

double sigma_ans(const AnswerabilityQuery& q, const AnswerabilityProvider& provider);

}  // namespace tcr::signals
