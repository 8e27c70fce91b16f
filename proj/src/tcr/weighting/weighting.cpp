#include "tcr/weighting/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"

namespace tcr::weighting {

namespace {

void check_labels(std::size_t n_preds, std::span<const int> labels) {
  if (n_preds != labels.size()) throw DimensionError("predictions and labels differ in length");
  if (labels.size() < 2) throw DegenerateInputError("need at least two labeled values");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DomainError("labels must be 0 or 1");
    (y ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DegenerateInputError("labels are all identical");
}

double population_variance(std::span<const double> x) {
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Cross-entropy of label y under logit z.
double bce_logit(double z, int y) { return softplus(z) - (y ? z : 0.0); }

}  // namespace

double snr(std::span<const double> preds, std::span<const int> labels, double cap) {
  check_labels(preds.size(), labels);
  std::vector<double> resid(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) resid[i] = labels[i] - preds[i];
  double signal = population_variance(preds);
  double noise = population_variance(resid);
  if (noise == 0.0) return cap;
  return std::clamp(signal / noise, 0.0, cap);
}

double LogisticFit::predict(double x) const { return sigmoid(intercept + slope * x); }

LogisticFit fit_logistic_1d(std::span<const double> x, std::span<const int> y, double l2) {
  check_labels(x.size(), y);
  double n = static_cast<double>(x.size());
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double sd = std::sqrt(population_variance(x));
  double pos = std::accumulate(y.begin(), y.end(), 0.0);
  double a = std::log(pos / (n - pos));
  double b = 0.0;
  if (sd > 0.0) {
    // Newton on standardized x; penalty l2 * n / 2 * b^2
    for (int iter = 0; iter < 100; ++iter) {
      double ga = 0.0, gb = l2 * n * b, haa = 0.0, hab = 0.0, hbb = l2 * n;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double t = (x[i] - mean) / sd;
        double p = sigmoid(a + b * t);
        double r = p - y[i];
        double w = p * (1.0 - p);
        ga += r;
        gb += r * t;
        haa += w;
        hab += w * t;
        hbb += w * t * t;
      }
      double det = haa * hbb - hab * hab;
      if (!(det > 0.0)) break;
      double da = (hbb * ga - hab * gb) / det;
      double db = (haa * gb - hab * ga) / det;
      a -= da;
      b -= db;
      if (std::fabs(da) + std::fabs(db) < 1e-12) break;
    }
  }
  LogisticFit fit;
  fit.slope = sd > 0.0 ? b / sd : 0.0;
  fit.intercept = a - fit.slope * mean;
  return fit;
}

std::vector<double> signal_predictor(std::span<const double> signal_values, std::span<const int> labels) {
  auto fit = fit_logistic_1d(signal_values, labels);
  std::vector<double> out(signal_values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fit.predict(signal_values[i]);
  return out;
}

SignalMap softmax_weights(const SignalMap& snrs) {
  if (snrs.empty()) throw EmptyInputError("softmax_weights needs at least one SNR");
  double m = -INFINITY;
  for (const auto& [k, v] : snrs) {
    if (!std::isfinite(v)) throw DomainError("SNR values must be finite");
    m = std::max(m, v);
  }
  double z = 0.0;
  SignalMap out;
  for (const auto& [k, v] : snrs) z += (out[k] = std::exp(v - m));
  for (auto& [k, v] : out) v /= z;
  return out;
}

void WeightConfig::validate() const {
  if (!(loss_alpha >= 0.0 && loss_alpha <= 1.0)) throw ConfigError("loss_alpha must be in [0, 1]");
  if (!(cap > 0.0)) throw ConfigError("SNR cap must be positive");
}

double total_loss(const SignalMap& prompt_losses, const SignalMap& projector_losses, const SignalMap& w,
                  const WeightConfig& cfg) {
  cfg.validate();
  for (const SignalMap* m : {&prompt_losses, &projector_losses, &w}) {
    if (m->size() != kSignalNames.size()) throw ConfigError("loss maps must have exactly the keys sem, fact, ans");
    for (const char* k : kSignalNames)
      if (!m->count(k)) throw ConfigError(std::string("loss maps are missing key '") + k + "'");
  }
  double total = 0.0;
  for (const char* k : kSignalNames)
    total += w.at(k) * (cfg.loss_alpha * prompt_losses.at(k) + (1.0 - cfg.loss_alpha) * projector_losses.at(k));
  return total;
}

void SurrogateConfig::validate() const {
  weights.validate();
  if (epochs < 0 || batch_size < 1 || !(learning_rate > 0.0) || n_soft < 1 || hidden < 1 || d_model < 1)
    throw ConfigError("invalid surrogate configuration");
  if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0) || !(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("surrogate split fractions must be in (0, 1)");
}

namespace {

std::array<double, 3> masked(const std::array<double, 3>& s, std::size_t i) {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  x[i] = s[i];
  return x;
}

struct Forward {
  std::vector<double> hidden, e_signal, mean_vec;
  double prompt_logit = 0.0;
  double proj_logit = 0.0;
};

Forward run(const SurrogateModel& m, const std::array<double, 3>& x) {
  Forward f;
  f.e_signal = signals::project_signals(x, m.projector, &f.hidden);
  std::size_t d = f.e_signal.size();
  f.mean_vec.assign(d, 0.0);
  for (const auto& t : m.soft_tokens)
    for (std::size_t j = 0; j < d; ++j) f.mean_vec[j] += t[j];
  double count = static_cast<double>(m.soft_tokens.size() + 1);
  for (std::size_t j = 0; j < d; ++j) f.mean_vec[j] = (f.mean_vec[j] + f.e_signal[j]) / count;
  f.prompt_logit = m.prompt_b;
  f.proj_logit = m.proj_b;
  for (std::size_t j = 0; j < d; ++j) {
    f.prompt_logit += m.prompt_w[j] * f.mean_vec[j];
    f.proj_logit += m.proj_w[j] * f.e_signal[j];
  }
  return f;
}

// Flat parameter views in a fixed order, for the optimizer.
std::vector<double*> param_refs(SurrogateModel& m) {
  std::vector<double*> refs;
  for (auto* v : {&m.projector.layer1.weight, &m.projector.layer1.bias, &m.projector.layer2.weight,
                  &m.projector.layer2.bias, &m.prompt_w, &m.proj_w})
    for (double& x : *v) refs.push_back(&x);
  for (auto& t : m.soft_tokens)
    for (double& x : t) refs.push_back(&x);
  refs.push_back(&m.prompt_b);
  refs.push_back(&m.proj_b);
  return refs;
}

struct Grads {
  std::vector<double> w1, b1, w2, b2, pw, qw;
  std::vector<std::vector<double>> soft;
  double pb = 0.0, qb = 0.0;

  explicit Grads(const SurrogateModel& m)
      : w1(m.projector.layer1.weight.size(), 0.0),
        b1(m.projector.layer1.bias.size(), 0.0),
        w2(m.projector.layer2.weight.size(), 0.0),
        b2(m.projector.layer2.bias.size(), 0.0),
        pw(m.prompt_w.size(), 0.0),
        qw(m.proj_w.size(), 0.0),
        soft(m.soft_tokens.size(), std::vector<double>(m.prompt_w.size(), 0.0)) {}

  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto* v : {&w1, &b1, &w2, &b2, &pw, &qw}) out.insert(out.end(), v->begin(), v->end());
    for (const auto& t : soft) out.insert(out.end(), t.begin(), t.end());
    out.push_back(pb);
    out.push_back(qb);
    return out;
  }
};

// Weighted L_total over the given cases; accumulates gradients when g is non-null.
double objective(const SurrogateModel& m, std::span<const SurrogateCase> cases, const std::vector<std::size_t>& idx,
                 double alpha, Grads* g) {
  double n = static_cast<double>(idx.size());
  double total = 0.0;
  std::size_t d = m.prompt_w.size();
  std::size_t h = m.projector.hidden();
  double count = static_cast<double>(m.soft_tokens.size() + 1);
  for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
    double wi = m.weights.at(kSignalNames[i]);
    for (std::size_t k : idx) {
      const auto& c = cases[k];
      auto x = masked(c.signals, i);
      Forward f = run(m, x);
      total += wi * (alpha * bce_logit(f.prompt_logit, c.label) + (1.0 - alpha) * bce_logit(f.proj_logit, c.label)) / n;
      if (!g) continue;
      double dlp = wi * alpha * (sigmoid(f.prompt_logit) - c.label) / n;
      double dlq = wi * (1.0 - alpha) * (sigmoid(f.proj_logit) - c.label) / n;
      g->pb += dlp;
      g->qb += dlq;
      std::vector<double> de(d);
      for (std::size_t j = 0; j < d; ++j) {
        g->pw[j] += dlp * f.mean_vec[j];
        g->qw[j] += dlq * f.e_signal[j];
        double dmean = dlp * m.prompt_w[j] / count;
        for (auto& t : g->soft) t[j] += dmean;
        de[j] = dmean + dlq * m.proj_w[j];
      }
      std::vector<double> dh(h, 0.0);
      for (std::size_t a = 0; a < h; ++a) {
        for (std::size_t j = 0; j < d; ++j) {
          g->w2[a * d + j] += f.hidden[a] * de[j];
          dh[a] += m.projector.layer2.weight[a * d + j] * de[j];
        }
      }
      for (std::size_t j = 0; j < d; ++j) g->b2[j] += de[j];
      for (std::size_t a = 0; a < h; ++a) {
        double dpre = m.projector.activation == signals::Activation::tanh
                          ? dh[a] * (1.0 - f.hidden[a] * f.hidden[a])
                          : (f.hidden[a] > 0.0 ? dh[a] : 0.0);
        g->b1[a] += dpre;
        for (std::size_t r = 0; r < 3; ++r) g->w1[r * h + a] += x[r] * dpre;
      }
    }
  }
  return total;
}

SignalMap calibration_snr(const SurrogateModel& m, std::span<const SurrogateCase> cases,
                          const std::vector<std::size_t>& calib, double cap) {
  std::vector<int> labels;
  for (std::size_t k : calib) labels.push_back(cases[k].label);
  SignalMap out;
  for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
    std::vector<double> values;
    for (std::size_t k : calib) values.push_back(sigmoid(run(m, masked(cases[k].signals, i)).proj_logit));
    out[kSignalNames[i]] = snr(signal_predictor(values, labels), labels, cap);
  }
  return out;
}

}  // namespace

double SurrogateModel::predict(const std::array<double, 3>& s) const {
  double z = 0.0;
  for (std::size_t i = 0; i < kSignalNames.size(); ++i) z += weights.at(kSignalNames[i]) * run(*this, masked(s, i)).prompt_logit;
  return sigmoid(z);
}

SurrogateResult train_surrogate(std::span<const SurrogateCase> cases, const SurrogateConfig& cfg) {
  cfg.validate();
  if (cases.size() < 100) throw EmptyInputError("surrogate training needs at least 100 labeled cases");

  std::vector<std::size_t> order(cases.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, 21));
  split_rng.shuffle(order);
  auto n_hold = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * static_cast<double>(cases.size())));
  std::vector<std::size_t> heldout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
  auto n_cal = static_cast<std::size_t>(std::llround(cfg.calibration_fraction * static_cast<double>(rest.size())));
  std::vector<std::size_t> calib(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_cal));
  std::vector<std::size_t> train(rest.begin() + static_cast<std::ptrdiff_t>(n_cal), rest.end());
  for (const auto* part : {&heldout, &calib, &train}) {
    bool has0 = false, has1 = false;
    for (std::size_t k : *part) (cases[k].label ? has1 : has0) = true;
    if (!has0 || !has1) throw DegenerateInputError("surrogate splits need both labels");
  }

  Rng rng(derive_seed(cfg.seed, 22));
  SurrogateModel m;
  m.projector = signals::init_projector(cfg.hidden, cfg.d_model, rng);
  m.soft_tokens.assign(cfg.n_soft, std::vector<double>(cfg.d_model));
  for (auto& t : m.soft_tokens)
    for (double& x : t) x = rng.normal(0.0, 0.1);
  m.prompt_w.resize(cfg.d_model);
  m.proj_w.resize(cfg.d_model);
  double hs = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  for (double& x : m.prompt_w) x = rng.normal(0.0, hs);
  for (double& x : m.proj_w) x = rng.normal(0.0, hs);

  SurrogateResult result;
  auto snrs = calibration_snr(m, cases, calib, cfg.weights.cap);
  m.weights = softmax_weights(snrs);
  result.epochs.push_back({0, snrs, m.weights, objective(m, cases, train, cfg.weights.loss_alpha, nullptr)});

  auto refs = param_refs(m);
  std::vector<double> adam_m(refs.size(), 0.0), adam_v(refs.size(), 0.0);
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(train);
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      std::vector<std::size_t> batch(train.begin() + static_cast<std::ptrdiff_t>(start),
                                     train.begin() + static_cast<std::ptrdiff_t>(std::min(train.size(), start + cfg.batch_size)));
      Grads g(m);
      objective(m, cases, batch, cfg.weights.loss_alpha, &g);
      auto flat = g.flat();
      ++step;
      double c1 = 1.0 - std::pow(0.9, static_cast<double>(step));
      double c2 = 1.0 - std::pow(0.999, static_cast<double>(step));
      for (std::size_t k = 0; k < refs.size(); ++k) {
        adam_m[k] = 0.9 * adam_m[k] + 0.1 * flat[k];
        adam_v[k] = 0.999 * adam_v[k] + 0.001 * flat[k] * flat[k];
        *refs[k] -= cfg.learning_rate * (adam_m[k] / c1) / (std::sqrt(adam_v[k] / c2) + 1e-8);
      }
    }
    snrs = calibration_snr(m, cases, calib, cfg.weights.cap);
    m.weights = softmax_weights(snrs);
    result.epochs.push_back({epoch, snrs, m.weights, objective(m, cases, train, cfg.weights.loss_alpha, nullptr)});
  }

  std::size_t correct = 0, positives = 0;
  for (std::size_t k : heldout) {
    int pred = m.predict(cases[k].signals) >= 0.5 ? 1 : 0;
    correct += pred == cases[k].label;
    positives += cases[k].label;
  }
  double nh = static_cast<double>(heldout.size());
  result.heldout_accuracy = static_cast<double>(correct) / nh;
  result.majority_baseline = std::max(static_cast<double>(positives), nh - static_cast<double>(positives)) / nh;
  result.n_train = train.size();
  result.n_calibration = calib.size();
  result.n_heldout = heldout.size();
  result.model = std::move(m);
  return result;
}

ojson report_to_json(const SurrogateResult& r) {
  ojson j;
  ojson epochs = ojson::array();
  for (const auto& e : r.epochs) {
    ojson ej;
    ej["epoch"] = e.epoch;
    ej["snr"] = ojson::object();
    ej["weights"] = ojson::object();
    for (const char* k : kSignalNames) {
      ej["snr"][k] = e.snr.at(k);
      ej["weights"][k] = e.weights.at(k);
    }
    ej["loss"] = e.loss;
    epochs.push_back(ej);
  }
  j["epochs"] = epochs;
  j["heldout_accuracy"] = r.heldout_accuracy;
  j["majority_baseline"] = r.majority_baseline;
  j["n_train"] = r.n_train;
  j["n_calibration"] = r.n_calibration;
  j["n_heldout"] = r.n_heldout;
  return j;
}

}  // namespace tcr::weighting
