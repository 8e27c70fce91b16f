#include "tcr/decoupler/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcr/common/errors.hpp"
#include "tcr/decoupler/losses.hpp"

namespace tcr::decoupler {

const char* to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

std::optional<Optimizer> optimizer_from_string(std::string_view s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (d_out < 1) throw ConfigError("d_out must be >= 1");
}

void EncoderPair::validate() const {
  sem.validate();
  fact.validate();
  if (sem.d_in != base_dim || fact.d_in != base_dim)
    throw DimensionError("encoder heads do not match the base dimension");
  if (sem.d_out > sem.d_in || fact.d_out > fact.d_in) throw DimensionError("head d_out exceeds d_in");
}

std::string surface_key(const std::string& triple_id, Surface s) {
  switch (s) {
    case Surface::statement: return triple_id + "/statement";
    case Surface::paraphrase: return triple_id + "/paraphrase";
    case Surface::contradiction: return triple_id + "/contradiction";
    case Surface::unrelated: return triple_id + "/unrelated";
  }
  return triple_id;
}

namespace {

constexpr std::array<Surface, 4> kSurfaces = {Surface::statement, Surface::paraphrase, Surface::contradiction,
                                              Surface::unrelated};

const std::string& surface_text(const datagen::ConflictTriple& t, Surface s) {
  switch (s) {
    case Surface::statement: return t.statement;
    case Surface::paraphrase: return t.paraphrase;
    case Surface::contradiction: return t.contradiction;
    case Surface::unrelated: return t.unrelated;
  }
  return t.statement;
}

}  // namespace

EmbeddingMap embed_triples(const datagen::TripleSet& ts, const embedkit::EmbedConfig& cfg,
                           std::optional<datagen::Split> only) {
  std::vector<std::string> keys, texts;
  for (const auto& t : ts) {
    if (only && t.split != *only) continue;
    for (Surface s : kSurfaces) {
      keys.push_back(surface_key(t.base.id, s));
      texts.push_back(surface_text(t, s));
    }
  }
  EmbeddingMap out;
  if (texts.empty()) return out;
  auto embs = embedkit::embed_batch(texts, cfg);
  for (std::size_t i = 0; i < keys.size(); ++i) out.emplace(keys[i], std::move(embs[i]));
  return out;
}

std::vector<BaseQuad> collect_quads(const datagen::TripleSet& ts, const EmbeddingMap& emb,
                                    std::optional<datagen::Split> only, std::size_t* base_dim) {
  std::vector<BaseQuad> out;
  std::size_t dim = 0;
  for (const auto& t : ts) {
    if (only && t.split != *only) continue;
    BaseQuad q;
    for (std::size_t k = 0; k < 4; ++k) {
      auto key = surface_key(t.base.id, kSurfaces[k]);
      auto it = emb.find(key);
      if (it == emb.end()) throw MissingEmbeddingError("no base embedding for '" + key + "'");
      if (dim == 0) dim = it->second.dim();
      if (it->second.dim() != dim) throw DimensionError("base embeddings have inconsistent dimensions");
      q.x[k] = to_sparse(it->second.values);
    }
    out.push_back(std::move(q));
  }
  if (base_dim) *base_dim = dim;
  return out;
}

EncoderPair init_pair(std::size_t base_dim, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.d_out > base_dim) throw ConfigError("d_out must not exceed the base embedding dimension");
  Rng rng(derive_seed(cfg.seed, 5));
  EncoderPair pair;
  pair.base_dim = base_dim;
  pair.sem = init_head(base_dim, cfg.d_out, rng);
  pair.fact = init_head(base_dim, cfg.d_out, rng);
  pair.meta.config = cfg;
  return pair;
}

namespace {

double head_quad(const ProjectionHead& h, LossKind kind, const BaseQuad& q, double tau, std::vector<double>* dw,
                 std::vector<double>* db) {
  std::array<std::vector<double>, 4> z;
  std::array<double, 4> norms;
  for (std::size_t k = 0; k < 4; ++k) {
    z[k] = affine(h, q.x[k]);
    norms[k] = embedkit::norm(z[k]);
    if (norms[k] == 0.0) throw DegenerateVectorError("projected vector is zero");
    for (double& v : z[k]) v /= norms[k];
  }
  std::array<std::span<const double>, 4> zs = {z[0], z[1], z[2], z[3]};
  if (!dw) return quad_loss(kind, zs, tau, nullptr);

  std::array<std::vector<double>, 4> dz;
  double loss = quad_loss(kind, zs, tau, &dz);
  std::vector<double> du(h.d_out);
  for (std::size_t k = 0; k < 4; ++k) {
    double proj = embedkit::dot(z[k], dz[k]);
    for (std::size_t j = 0; j < h.d_out; ++j) du[j] = (dz[k][j] - z[k][j] * proj) / norms[k];
    const SparseVec& x = q.x[k];
    for (std::size_t n = 0; n < x.index.size(); ++n) {
      double* row = &(*dw)[x.index[n] * h.d_out];
      double xi = x.value[n];
      for (std::size_t j = 0; j < h.d_out; ++j) row[j] += xi * du[j];
    }
    for (std::size_t j = 0; j < h.d_out; ++j) (*db)[j] += du[j];
  }
  return loss;
}

double accumulate(const EncoderPair& pair, const BaseQuad& q, double tau, HeadGrads* g) {
  double loss = head_quad(pair.sem, LossKind::sem, q, tau, g ? &g->dw_sem : nullptr, g ? &g->db_sem : nullptr);
  loss += head_quad(pair.fact, LossKind::fact, q, tau, g ? &g->dw_fact : nullptr, g ? &g->db_fact : nullptr);
  return loss;
}

void zero_grads(const EncoderPair& pair, HeadGrads& g) {
  g.dw_sem.assign(pair.sem.weight.size(), 0.0);
  g.db_sem.assign(pair.sem.bias.size(), 0.0);
  g.dw_fact.assign(pair.fact.weight.size(), 0.0);
  g.db_fact.assign(pair.fact.bias.size(), 0.0);
}

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void step(std::vector<std::vector<double>*> params, const std::vector<const std::vector<double>*>& grads) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    ++t_;
    double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      const auto& g = *grads[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = kBeta1 * m_[k][i] + (1.0 - kBeta1) * g[i];
        v_[k][i] = kBeta2 * v_[k][i] + (1.0 - kBeta2) * g[i] * g[i];
        p[i] -= lr_ * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

double mean_loss(const EncoderPair& pair, const std::vector<BaseQuad>& quads, double tau) {
  double total = 0.0;
  for (const auto& q : quads) total += accumulate(pair, q, tau, nullptr);
  return total / static_cast<double>(quads.size());
}

}  // namespace

double loss_ctr_grad(const EncoderPair& pair, std::span<const BaseQuad> batch, double tau, HeadGrads* g) {
  if (batch.empty()) throw EmptyInputError("loss_ctr requires a non-empty batch");
  if (g) zero_grads(pair, *g);
  double total = 0.0;
  for (const auto& q : batch) total += accumulate(pair, q, tau, g);
  return total;
}

EncoderPair train(const datagen::TripleSet& ts, const EmbeddingMap& base_embeddings, const TrainConfig& cfg) {
  cfg.validate();
  std::size_t base_dim = 0;
  auto quads = collect_quads(ts, base_embeddings, datagen::Split::train, &base_dim);
  if (quads.empty()) throw EmptyInputError("no train-split triples to train on");

  EncoderPair pair = init_pair(base_dim, cfg);
  pair.meta.loss_curve.push_back(mean_loss(pair, quads, cfg.tau));

  Rng rng(derive_seed(cfg.seed, 6));
  Adam adam(cfg.learning_rate);
  std::vector<std::size_t> order(quads.size());
  std::iota(order.begin(), order.end(), 0);
  HeadGrads g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      zero_grads(pair, g);
      for (std::size_t i = start; i < end; ++i) accumulate(pair, quads[order[i]], cfg.tau, &g);
      std::vector<std::vector<double>*> params = {&pair.sem.weight, &pair.sem.bias, &pair.fact.weight,
                                                  &pair.fact.bias};
      std::vector<const std::vector<double>*> grads = {&g.dw_sem, &g.db_sem, &g.dw_fact, &g.db_fact};
      if (cfg.optimizer == Optimizer::adam) {
        adam.step(params, grads);
      } else {
        for (std::size_t k = 0; k < params.size(); ++k)
          for (std::size_t i = 0; i < params[k]->size(); ++i) (*params[k])[i] -= cfg.learning_rate * (*grads[k])[i];
      }
    }
    pair.meta.loss_curve.push_back(mean_loss(pair, quads, cfg.tau));
  }
  return pair;
}

GradCheckResult grad_check(const EncoderPair& pair, std::span<const BaseQuad> sample, double tau, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw ConfigError("grad_check epsilon must be in [1e-7, 1e-3]");
  HeadGrads g;
  loss_ctr_grad(pair, sample, tau, &g);
  EncoderPair probe = pair;
  GradCheckResult r;
  std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> groups = {
      {&probe.sem.weight, &g.dw_sem}, {&probe.sem.bias, &g.db_sem},
      {&probe.fact.weight, &g.dw_fact}, {&probe.fact.bias, &g.db_fact}};
  for (auto& [param, grad] : groups) {
    for (std::size_t i = 0; i < param->size(); ++i) {
      double saved = (*param)[i];
      (*param)[i] = saved + epsilon;
      double up = loss_ctr_grad(probe, sample, tau, nullptr);
      (*param)[i] = saved - epsilon;
      double down = loss_ctr_grad(probe, sample, tau, nullptr);
      (*param)[i] = saved;
      double numeric = (up - down) / (2.0 * epsilon);
      double analytic = (*grad)[i];
      double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
      r.max_rel_error = std::max(r.max_rel_error, std::fabs(analytic - numeric) / denom);
      r.max_abs_grad = std::max(r.max_abs_grad, std::fabs(analytic));
      ++r.n_params;
    }
  }
  return r;
}

}  // namespace tcr::decoupler
