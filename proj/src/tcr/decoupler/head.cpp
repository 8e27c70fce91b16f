#include "tcr/decoupler/head.hpp"

#include <cmath>

#include "tcr/common/errors.hpp"

namespace tcr::decoupler {

ProjectionHead ProjectionHead::zeros(std::size_t d_in, std::size_t d_out) {
  ProjectionHead h;
  h.d_in = d_in;
  h.d_out = d_out;
  h.weight.assign(d_in * d_out, 0.0);
  h.bias.assign(d_out, 0.0);
  return h;
}

ProjectionHead ProjectionHead::identity(std::size_t d) {
  ProjectionHead h = zeros(d, d);
  for (std::size_t i = 0; i < d; ++i) h.w(i, i) = 1.0;
  return h;
}

void ProjectionHead::validate() const {
  if (d_in == 0 || d_out == 0) throw DimensionError("projection head has a zero dimension");
  if (weight.size() != d_in * d_out || bias.size() != d_out)
    throw DimensionError("projection head storage does not match its dimensions");
  for (double x : weight)
    if (!std::isfinite(x)) throw DomainError("projection head has a non-finite weight");
  for (double x : bias)
    if (!std::isfinite(x)) throw DomainError("projection head has a non-finite bias");
}

ProjectionHead init_head(std::size_t d_in, std::size_t d_out, Rng& rng) {
  if (d_in == 0 || d_out == 0 || d_out > d_in) throw ConfigError("head dimensions must satisfy 0 < d_out <= d_in");
  ProjectionHead h = ProjectionHead::zeros(d_in, d_out);
  double stddev = 1.0 / std::sqrt(3.0 * static_cast<double>(d_in));
  for (double& x : h.weight) x = rng.normal(0.0, stddev);
  return h;
}

std::vector<double> affine(const ProjectionHead& h, std::span<const double> x) {
  if (x.size() != h.d_in)
    throw DimensionError("head expects input dim " + std::to_string(h.d_in) + ", got " + std::to_string(x.size()));
  std::vector<double> y = h.bias;
  for (std::size_t i = 0; i < h.d_in; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = &h.weight[i * h.d_out];
    for (std::size_t j = 0; j < h.d_out; ++j) y[j] += row[j] * xi;
  }
  return y;
}

std::vector<double> affine(const ProjectionHead& h, const SparseVec& x) {
  std::vector<double> y = h.bias;
  for (std::size_t k = 0; k < x.index.size(); ++k) {
    const double* row = &h.weight[x.index[k] * h.d_out];
    double xi = x.value[k];
    for (std::size_t j = 0; j < h.d_out; ++j) y[j] += row[j] * xi;
  }
  return y;
}

Embedding forward(const ProjectionHead& h, const Embedding& v) {
  Embedding out;
  out.source = v.source;
  out.values = affine(h, v.values);
  embedkit::normalize_in_place(out.values);
  return out;
}

SparseVec to_sparse(std::span<const double> x) {
  SparseVec s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      s.index.push_back(i);
      s.value.push_back(x[i]);
    }
  }
  return s;
}

}  // namespace tcr::decoupler
