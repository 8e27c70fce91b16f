#pragma once

#include <array>
#include <span>
#include <vector>

#include "tcr/embedkit/embedding.hpp"

namespace tcr::decoupler {

using embedkit::Embedding;

enum class LossKind { sem, fact };

// Inputs are projected, unit-normalized vectors; similarities are cosines.
double loss_sem(const Embedding& anchor, const Embedding& para, const Embedding& conf, const Embedding& irr,
                double tau);
double loss_fact(const Embedding& anchor, const Embedding& para, const Embedding& conf, const Embedding& irr,
                 double tau);

struct ProjectedQuad {
  std::array<Embedding, 4> sem;   // anchor, para, conf, irr in the semantic space
  std::array<Embedding, 4> fact;  // same four in the factual space
};

double loss_ctr(std::span<const ProjectedQuad> batch, double tau);

// Loss from the three scaled similarities s_k = sim(a, x_k)/tau (para, conf, irr).
// grad receives dL/ds_k when non-null.
double loss_from_scores(LossKind kind, const std::array<double, 3>& s, std::array<double, 3>* grad);

// Loss of one quadruple of unit vectors and, optionally, dL/dz for each of the four.
double quad_loss(LossKind kind, const std::array<std::span<const double>, 4>& z, double tau,
                 std::array<std::vector<double>, 4>* grad);

}  // namespace tcr::decoupler
