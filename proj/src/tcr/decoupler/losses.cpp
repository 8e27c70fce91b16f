#include "tcr/decoupler/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tcr/common/errors.hpp"

namespace tcr::decoupler {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperature tau must be positive");
}

double quad_from_embeddings(LossKind kind, const Embedding& a, const Embedding& p, const Embedding& c,
                            const Embedding& i, double tau) {
  check_tau(tau);
  if (p.dim() != a.dim() || c.dim() != a.dim() || i.dim() != a.dim())
    throw DimensionError("loss inputs must share one dimension");
  std::array<double, 3> s = {embedkit::cosine(a, p) / tau, embedkit::cosine(a, c) / tau,
                             embedkit::cosine(a, i) / tau};
  return loss_from_scores(kind, s, nullptr);
}

}  // namespace

double loss_from_scores(LossKind kind, const std::array<double, 3>& s, std::array<double, 3>* grad) {
  // loss = logsumexp(all) - logsumexp(numerator terms)
  double m = std::max({s[0], s[1], s[2]});
  std::array<double, 3> e = {std::exp(s[0] - m), std::exp(s[1] - m), std::exp(s[2] - m)};
  double denom = e[0] + e[1] + e[2];
  double lse_all = m + std::log(denom);
  double loss;
  if (kind == LossKind::sem) {
    double m2 = std::max(s[0], s[1]);
    double e0 = std::exp(s[0] - m2), e1 = std::exp(s[1] - m2);
    double num = e0 + e1;
    loss = lse_all - (m2 + std::log(num));
    if (grad) {
      (*grad)[0] = -e0 / num + e[0] / denom;
      (*grad)[1] = -e1 / num + e[1] / denom;
      (*grad)[2] = e[2] / denom;
    }
  } else {
    loss = lse_all - s[0];
    if (grad) {
      (*grad)[0] = -1.0 + e[0] / denom;
      (*grad)[1] = e[1] / denom;
      (*grad)[2] = e[2] / denom;
    }
  }
  return std::max(loss, 0.0);
}

double loss_sem(const Embedding& anchor, const Embedding& para, const Embedding& conf, const Embedding& irr,
                double tau) {
  return quad_from_embeddings(LossKind::sem, anchor, para, conf, irr, tau);
}

double loss_fact(const Embedding& anchor, const Embedding& para, const Embedding& conf, const Embedding& irr,
                 double tau) {
  return quad_from_embeddings(LossKind::fact, anchor, para, conf, irr, tau);
}

double loss_ctr(std::span<const ProjectedQuad> batch, double tau) {
  check_tau(tau);
  if (batch.empty()) throw EmptyInputError("loss_ctr requires a non-empty batch");
  double total = 0.0;
  for (const auto& q : batch) {
    total += loss_sem(q.sem[0], q.sem[1], q.sem[2], q.sem[3], tau);
    total += loss_fact(q.fact[0], q.fact[1], q.fact[2], q.fact[3], tau);
  }
  return total;
}

double quad_loss(LossKind kind, const std::array<std::span<const double>, 4>& z, double tau,
                 std::array<std::vector<double>, 4>* grad) {
  check_tau(tau);
  std::size_t d = z[0].size();
  std::array<double, 3> s;
  for (int k = 0; k < 3; ++k) s[k] = embedkit::dot(z[0], z[k + 1]) / tau;
  std::array<double, 3> g;
  double loss = loss_from_scores(kind, s, grad ? &g : nullptr);
  if (grad) {
    for (auto& v : *grad) v.assign(d, 0.0);
    for (int k = 0; k < 3; ++k) {
      double c = g[k] / tau;
      for (std::size_t j = 0; j < d; ++j) {
        (*grad)[0][j] += c * z[k + 1][j];
        (*grad)[k + 1][j] += c * z[0][j];
      }
    }
  }
  return loss;
}

}  // namespace tcr::decoupler
