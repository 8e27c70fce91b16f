#include "tcr/theory/theory.hpp"

#include <cmath>
#include <cstdio>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"

namespace tcr::theory {

void PipelineParams::validate() const {
  const double values[] = {rho, fnr, fpr, eps, beta, zeta};
  for (std::size_t i = 0; i < 6; ++i)
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      throw DomainError(std::string("parameter '") + kParamNames[i] + "' must lie in [0, 1]");
}

bool PipelineParams::beta_below_eps() const { return beta < eps; }

double exact_gap(const PipelineParams& p) {
  p.validate();
  return (1.0 - p.rho) * p.fpr * (p.beta - p.eps) + p.rho * ((1.0 - p.fnr) * p.beta + p.fnr * p.zeta - p.eps);
}

double upper_bound(const PipelineParams& p) {
  p.validate();
  return p.rho * p.fnr + p.beta * (p.rho * (1.0 - p.fnr) + (1.0 - p.rho) * p.fpr);
}

namespace {

SimResult run_simulation(const PipelineParams& p, std::uint64_t n, std::uint64_t seed, const Detector* detect) {
  p.validate();
  if (n < 1000) throw DomainError("simulate requires n >= 1000");
  std::uint64_t counts[2][2] = {{0, 0}, {0, 0}};
  std::uint64_t errors = 0;
  std::uint64_t shards = (n + kShardSize - 1) / kShardSize;
  for (std::uint64_t shard = 0; shard < shards; ++shard) {
    Rng rng(seed, shard);
    std::uint64_t begin = shard * kShardSize;
    std::uint64_t end = std::min(n, begin + kShardSize);
    for (std::uint64_t t = begin; t < end; ++t) {
      bool r = rng.uniform() < p.rho;
      double u = rng.uniform();
      bool d = detect ? (*detect)(r, t) : (r ? !(u < p.fnr) : (u < p.fpr));
      double g_rate = d ? p.beta : (r ? p.zeta : p.eps);
      bool g = rng.uniform() < g_rate;
      ++counts[r][d];
      errors += g;
    }
  }
  SimResult res;
  res.n = n;
  res.seed = seed;
  double nn = static_cast<double>(n);
  double mean = static_cast<double>(errors) / nn;
  res.delta_hat = mean - p.eps;
  // sample standard deviation of a 0/1 variable
  double var = (static_cast<double>(errors) - nn * mean * mean) / (nn - 1.0);
  res.std_error = std::sqrt(std::max(var, 0.0) / nn);
  res.branch_counts = {{"R0D0", counts[0][0]}, {"R0D1", counts[0][1]}, {"R1D0", counts[1][0]}, {"R1D1", counts[1][1]}};
  return res;
}

}  // namespace

SimResult simulate(const PipelineParams& p, std::uint64_t n, std::uint64_t seed) {
  return run_simulation(p, n, seed, nullptr);
}

SimResult simulate_with_detector(const PipelineParams& p, std::uint64_t n, std::uint64_t seed, const Detector& detect) {
  return run_simulation(p, n, seed, &detect);
}

DominanceReport dominance_report(const PipelineParams& p) {
  p.validate();
  DominanceReport r;
  r.miss_term = p.rho * p.fnr;
  r.noisy_branch = p.beta * p.rho * (1.0 - p.fnr);
  r.clean_branch = p.beta * (1.0 - p.rho) * p.fpr;
  r.branch_term = p.beta * (p.rho * (1.0 - p.fnr) + (1.0 - p.rho) * p.fpr);
  r.upper_bound = r.miss_term + r.branch_term;
  r.dominant = r.miss_term >= r.branch_term ? "miss" : "branch";
  return r;
}

std::vector<PipelineParams> expand_grid(const json& spec, const PipelineParams& defaults) {
  if (!spec.is_object()) throw ConfigError("sweep spec must be a JSON object {param: [values]}");
  std::array<std::vector<double>, 6> axes;
  const double base[] = {defaults.rho, defaults.fnr, defaults.fpr, defaults.eps, defaults.beta, defaults.zeta};
  for (std::size_t i = 0; i < 6; ++i) axes[i] = {base[i]};
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    std::size_t k = 0;
    while (k < 6 && it.key() != kParamNames[k]) ++k;
    if (k == 6) throw ConfigError("unknown sweep parameter '" + it.key() + "'");
    const auto& vals = it.value();
    std::vector<double> axis;
    if (vals.is_number()) {
      axis.push_back(vals.get<double>());
    } else if (vals.is_array() && !vals.empty()) {
      for (const auto& v : vals) {
        if (!v.is_number()) throw ConfigError("sweep values for '" + it.key() + "' must be numbers");
        axis.push_back(v.get<double>());
      }
    } else {
      throw ConfigError("sweep values for '" + it.key() + "' must be a non-empty array");
    }
    axes[k] = std::move(axis);
  }
  std::vector<PipelineParams> out;
  std::array<std::size_t, 6> idx{};
  for (;;) {
    PipelineParams p{axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]],
                     axes[3][idx[3]], axes[4][idx[4]], axes[5][idx[5]]};
    p.validate();
    out.push_back(p);
    int k = 5;
    while (k >= 0) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

std::vector<SweepRow> bound_sweep(const json& spec, std::uint64_t n, std::uint64_t seed) {
  auto grid = expand_grid(spec);
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepRow r;
    r.params = grid[i];
    r.exact_gap = exact_gap(grid[i]);
    r.upper_bound = upper_bound(grid[i]);
    r.sim = simulate(grid[i], n, derive_seed(seed, 31, i));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "rho,fnr,fpr,eps,beta,zeta,exact_gap,upper_bound,delta_hat,stderr\n";
  char buf[512];
  for (const auto& r : rows) {
    const auto& p = r.params;
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", p.rho, p.fnr,
                  p.fpr, p.eps, p.beta, p.zeta, r.exact_gap, r.upper_bound, r.sim.delta_hat, r.sim.std_error);
    out += buf;
  }
  return out;
}

}  // namespace tcr::theory
