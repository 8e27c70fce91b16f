#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tcr/datagen/datagen.hpp"

namespace tcr::eval {

std::string normalize_answer(std::string_view s);
int em(std::string_view pred, std::string_view gold);
double f1_token(std::string_view pred, std::string_view gold);

struct DetectionRecord {
  double score = 0.0;
  int label = 0;  // 1 = genuine conflict
};

double detection_f1(std::span<const DetectionRecord> recs, double threshold);

struct ThresholdSweep {
  double best_threshold = 0.0;
  double best_f1 = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, f1) over distinct scores
};

ThresholdSweep sweep_thresholds(std::span<const DetectionRecord> recs);

double auroc(std::span<const DetectionRecord> recs);
double auroc_bruteforce(std::span<const DetectionRecord> recs);

struct OutcomeCase {
  bool closed_book_correct = false;
  datagen::ContextType context_type = datagen::ContextType::golden;
  bool final_correct = false;
};

double kgrr(std::span<const OutcomeCase> cases);
double mcor(std::span<const OutcomeCase> cases);

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(std::span<const double> x);
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

// ratings[rater][item]; nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<int>>>;
double krippendorff_alpha_nominal(const RatingMatrix& ratings);

}  // namespace tcr::eval
