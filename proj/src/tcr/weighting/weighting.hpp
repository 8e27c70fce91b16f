#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tcr/common/io.hpp"
#include "tcr/signals/signals.hpp"

namespace tcr::weighting {

// Keyed by signal name: "sem", "fact", "ans".
using SignalMap = std::map<std::string, double>;

inline constexpr std::array<const char*, 3> kSignalNames = {"sem", "fact", "ans"};
inline constexpr double kDefaultSnrCap = 10.0;

// Var(preds) / Var(labels - preds), population variances, clamped to [0, cap].
double snr(std::span<const double> preds, std::span<const int> labels, double cap = kDefaultSnrCap);

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;

  double predict(double x) const;
};

// Newton's method on the L2-penalized log-likelihood (penalty on the slope only).
LogisticFit fit_logistic_1d(std::span<const double> x, std::span<const int> y, double l2 = 1e-4);

std::vector<double> signal_predictor(std::span<const double> signal_values, std::span<const int> labels);

SignalMap softmax_weights(const SignalMap& snrs);

struct WeightConfig {
  double loss_alpha = 0.5;
  double cap = kDefaultSnrCap;

  void validate() const;
};

double total_loss(const SignalMap& prompt_losses, const SignalMap& projector_losses, const SignalMap& w,
                  const WeightConfig& cfg);

struct SurrogateCase {
  std::array<double, 3> signals{};  // sem, fact, ans
  int label = 0;                    // 1 = genuine conflict
};

struct SurrogateConfig {
  int epochs = 300;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  std::size_t n_soft = signals::kDefaultSoftTokens;
  std::size_t hidden = 16;
  std::size_t d_model = 64;
  double calibration_fraction = 0.2;
  double holdout_fraction = 0.2;
  WeightConfig weights;
  std::uint64_t seed = 42;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  SignalMap snr;
  SignalMap weights;
  double loss = 0.0;
};

struct SurrogateModel {
  signals::SignalProjector projector;
  std::vector<std::vector<double>> soft_tokens;
  std::vector<double> prompt_w;
  double prompt_b = 0.0;
  std::vector<double> proj_w;
  double proj_b = 0.0;
  SignalMap weights;

  // P(conflict) = sigmoid(sum_i w_i * prompt_logit_i)
  double predict(const std::array<double, 3>& signals) const;
};

struct SurrogateResult {
  SurrogateModel model;
  std::vector<EpochReport> epochs;
  double heldout_accuracy = 0.0;
  double majority_baseline = 0.0;
  std::size_t n_train = 0, n_calibration = 0, n_heldout = 0;
};

SurrogateResult train_surrogate(std::span<const SurrogateCase> cases, const SurrogateConfig& cfg);

ojson report_to_json(const SurrogateResult& r);

}  // namespace tcr::weighting
