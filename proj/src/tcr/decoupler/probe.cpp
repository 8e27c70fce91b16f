#include "tcr/decoupler/probe.hpp"

#include <cmath>
#include <limits>

#include "tcr/common/errors.hpp"

namespace tcr::decoupler {

namespace {

constexpr std::array<std::array<double, 2>, 3> kPrototypes = {{{1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}}};

std::array<double, 2> project2(const ProjectionHead& h, std::span<const double> f) {
  std::array<double, 2> p = {h.bias[0], h.bias[1]};
  for (std::size_t i = 0; i < h.d_in; ++i) {
    p[0] += h.weight[2 * i] * f[i];
    p[1] += h.weight[2 * i + 1] * f[i];
  }
  return p;
}

}  // namespace

const char* to_string(PairLabel l) {
  switch (l) {
    case PairLabel::para: return "para";
    case PairLabel::conf: return "conf";
    case PairLabel::irr: return "irr";
  }
  return "unknown";
}

std::vector<double> pair_feature(std::span<const double> anchor, std::span<const double> variant) {
  if (anchor.size() != variant.size()) throw DimensionError("probe pair members differ in dimension");
  std::vector<double> f(anchor.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = anchor[i] * variant[i];
  return f;
}

ProjectionHead train_probe_2d(std::span<const LabeledPair> pairs, const ProbeConfig& cfg) {
  if (pairs.empty()) throw ConfigError("probe needs labeled pairs");
  std::array<int, 3> counts{};
  for (const auto& p : pairs) ++counts[static_cast<int>(p.label)];
  int present = (counts[0] > 0) + (counts[1] > 0) + (counts[2] > 0);
  if (present < 3) throw ConfigError("probe training needs all three classes");
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0) || !(cfg.pull_weight >= 0.0))
    throw ConfigError("invalid probe configuration");

  std::size_t d = pairs[0].anchor.size();
  std::vector<std::vector<double>> feats, pull;
  feats.reserve(pairs.size());
  for (const auto& p : pairs) {
    feats.push_back(pair_feature(p.anchor, p.variant));
    if (feats.back().size() != d) throw DimensionError("probe inputs differ in dimension");
    if (p.label == PairLabel::para) {
      auto self = pair_feature(p.anchor, p.anchor);
      for (std::size_t i = 0; i < d; ++i) self[i] -= feats.back()[i];
      pull.push_back(std::move(self));
    }
  }

  Rng rng(derive_seed(cfg.seed, 11));
  ProjectionHead h = ProjectionHead::zeros(d, 2);
  double stddev = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& w : h.weight) w = rng.normal(0.0, stddev);

  std::vector<double> m(h.weight.size() + 2, 0.0), v(h.weight.size() + 2, 0.0), g(h.weight.size() + 2);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double n = static_cast<double>(pairs.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t s = 0; s < feats.size(); ++s) {
      auto p = project2(h, feats[s]);
      std::array<double, 3> logits;
      for (int c = 0; c < 3; ++c) {
        double dx = p[0] - kPrototypes[c][0], dy = p[1] - kPrototypes[c][1];
        logits[c] = -(dx * dx + dy * dy);
      }
      double mx = std::max({logits[0], logits[1], logits[2]});
      std::array<double, 3> q;
      double z = 0.0;
      for (int c = 0; c < 3; ++c) z += (q[c] = std::exp(logits[c] - mx));
      std::array<double, 2> dp = {0.0, 0.0};
      int y = static_cast<int>(pairs[s].label);
      for (int c = 0; c < 3; ++c) {
        double coef = (q[c] / z - (c == y ? 1.0 : 0.0)) / n;
        dp[0] += coef * -2.0 * (p[0] - kPrototypes[c][0]);
        dp[1] += coef * -2.0 * (p[1] - kPrototypes[c][1]);
      }
      const auto& f = feats[s];
      for (std::size_t i = 0; i < d; ++i) {
        g[2 * i] += f[i] * dp[0];
        g[2 * i + 1] += f[i] * dp[1];
      }
      g[2 * d] += dp[0];
      g[2 * d + 1] += dp[1];
    }
    if (!pull.empty() && cfg.pull_weight > 0.0) {
      double scale = 2.0 * cfg.pull_weight / static_cast<double>(pull.size());
      for (const auto& diff : pull) {
        std::array<double, 2> delta = {0.0, 0.0};
        for (std::size_t i = 0; i < d; ++i) {
          delta[0] += h.weight[2 * i] * diff[i];
          delta[1] += h.weight[2 * i + 1] * diff[i];
        }
        for (std::size_t i = 0; i < d; ++i) {
          g[2 * i] += scale * diff[i] * delta[0];
          g[2 * i + 1] += scale * diff[i] * delta[1];
        }
      }
    }
    double t = static_cast<double>(epoch + 1);
    double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t k = 0; k < g.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      double step = cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      if (k < h.weight.size()) h.weight[k] -= step;
      else h.bias[k - h.weight.size()] -= step;
    }
  }
  return h;
}

std::array<double, 2> probe_point(const ProjectionHead& probe, const LabeledPair& pair) {
  if (probe.d_out != 2) throw DimensionError("probe head must have d_out = 2");
  if (pair.anchor.size() != probe.d_in) throw DimensionError("probe input dimension mismatch");
  return project2(probe, pair_feature(pair.anchor, pair.variant));
}

ProbeSummary summarize_probe(const ProjectionHead& probe, std::span<const LabeledPair> fit,
                             std::span<const LabeledPair> eval) {
  ProbeSummary s;
  std::array<int, 3> counts{};
  for (const auto& p : fit) {
    auto pt = probe_point(probe, p);
    int c = static_cast<int>(p.label);
    s.centroids[c][0] += pt[0];
    s.centroids[c][1] += pt[1];
    ++counts[c];
  }
  for (int c = 0; c < 3; ++c) {
    if (counts[c] == 0) throw DegenerateInputError("probe summary needs all three classes");
    s.centroids[c][0] /= counts[c];
    s.centroids[c][1] /= counts[c];
  }
  const int para = 0, conf = 1, irr = 2;
  s.axis_sign[0] = s.centroids[para][0] >= s.centroids[irr][0] ? 1 : -1;
  s.axis_sign[1] = s.centroids[para][1] >= s.centroids[conf][1] ? 1 : -1;
  for (auto& c : s.centroids) {
    c[0] *= s.axis_sign[0];
    c[1] *= s.axis_sign[1];
  }
  int correct = 0;
  for (const auto& p : eval) {
    auto pt = probe_point(probe, p);
    pt[0] *= s.axis_sign[0];
    pt[1] *= s.axis_sign[1];
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      double dx = pt[0] - s.centroids[c][0], dy = pt[1] - s.centroids[c][1];
      double dist = dx * dx + dy * dy;
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    correct += best == static_cast<int>(p.label);
  }
  s.accuracy = eval.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(eval.size());
  return s;
}

std::vector<std::vector<double>> pca_scores(const std::vector<std::vector<double>>& rows, std::size_t k) {
  if (rows.empty()) throw EmptyInputError("pca needs at least one row");
  std::size_t d = rows[0].size();
  k = std::min(k, d);
  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("pca rows differ in dimension");
    for (std::size_t i = 0; i < d; ++i) mean[i] += r[i];
  }
  for (double& x : mean) x /= static_cast<double>(rows.size());
  std::vector<std::vector<double>> centered = rows;
  for (auto& r : centered)
    for (std::size_t i = 0; i < d; ++i) r[i] -= mean[i];

  std::vector<std::vector<double>> comps;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = 1.0 + 0.01 * static_cast<double>((i * 7919 + c * 104729) % 97);
    for (int iter = 0; iter < 300; ++iter) {
      // w = X^T X v, then remove found components
      std::vector<double> w(d, 0.0);
      for (const auto& r : centered) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += r[i] * v[i];
        for (std::size_t i = 0; i < d; ++i) w[i] += s * r[i];
      }
      for (const auto& u : comps) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += u[i] * w[i];
        for (std::size_t i = 0; i < d; ++i) w[i] -= s * u[i];
      }
      double n = embedkit::norm(w);
      if (n == 0.0) break;
      for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / n;
    }
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
      if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
    if (v[arg] < 0)
      for (double& x : v) x = -x;
    comps.push_back(std::move(v));
  }
  std::vector<std::vector<double>> scores(rows.size(), std::vector<double>(k, 0.0));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < d; ++i) scores[r][c] += centered[r][i] * comps[c][i];
  return scores;
}

}  // namespace tcr::decoupler
