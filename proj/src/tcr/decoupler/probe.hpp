#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcr/decoupler/head.hpp"

namespace tcr::decoupler {

enum class PairLabel { para = 0, conf = 1, irr = 2 };

const char* to_string(PairLabel l);

// One (anchor, variant) pair of base embeddings.
struct LabeledPair {
  std::vector<double> anchor;
  std::vector<double> variant;
  PairLabel label = PairLabel::para;
};

struct ProbeConfig {
  int epochs = 300;
  double learning_rate = 0.05;
  double pull_weight = 0.1;
  std::uint64_t seed = 42;
};

// Pair feature: element-wise product anchor * variant (sums to the raw cosine).
std::vector<double> pair_feature(std::span<const double> anchor, std::span<const double> variant);

// Linear d -> 2 head trained with a 3-class softmax over squared distances to
// fixed class prototypes (para (1,1), conf (1,-1), irr (-1,-1)) plus a pull
// term keeping P(a*a) near P(a*para).
ProjectionHead train_probe_2d(std::span<const LabeledPair> pairs, const ProbeConfig& cfg);

std::array<double, 2> probe_point(const ProjectionHead& probe, const LabeledPair& pair);

struct ProbeSummary {
  std::array<std::array<double, 2>, 3> centroids{};  // indexed by PairLabel
  std::array<int, 2> axis_sign = {1, 1};              // applied orientation flips
  double accuracy = 0.0;                              // nearest-centroid accuracy
};

// Centroids after orienting axes so para sits upper-right; accuracy of the
// nearest-centroid rule with centroids fitted on `fit` and scored on `eval`.
ProbeSummary summarize_probe(const ProjectionHead& probe, std::span<const LabeledPair> fit,
                             std::span<const LabeledPair> eval);

// First `k` principal-component scores of the rows (power iteration, deterministic).
std::vector<std::vector<double>> pca_scores(const std::vector<std::vector<double>>& rows, std::size_t k);

}  // namespace tcr::decoupler
