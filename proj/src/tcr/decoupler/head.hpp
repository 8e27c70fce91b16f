#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tcr/common/rng.hpp"
#include "tcr/embedkit/embedding.hpp"

namespace tcr::decoupler {

using embedkit::Embedding;

// y = W^T x + b with W stored row-major as d_in x d_out.
struct ProjectionHead {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  double& w(std::size_t i, std::size_t j) { return weight[i * d_out + j]; }
  double w(std::size_t i, std::size_t j) const { return weight[i * d_out + j]; }

  static ProjectionHead zeros(std::size_t d_in, std::size_t d_out);
  static ProjectionHead identity(std::size_t d);
  void validate() const;
};

// Scaled Gaussian weights with std 1/sqrt(3 d_in), zero bias.
ProjectionHead init_head(std::size_t d_in, std::size_t d_out, Rng& rng);

std::vector<double> affine(const ProjectionHead& h, std::span<const double> x);
Embedding forward(const ProjectionHead& h, const Embedding& v);

// Sparse view of an input vector; hash embeddings have few non-zeros.
struct SparseVec {
  std::vector<std::size_t> index;
  std::vector<double> value;
};

SparseVec to_sparse(std::span<const double> x);
std::vector<double> affine(const ProjectionHead& h, const SparseVec& x);

}  // namespace tcr::decoupler
