#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tcr/common/io.hpp"

namespace tcr::theory {

struct PipelineParams {
  double rho = 0.3;   // probability of noisy retrieval
  double fnr = 0.1;   // detector misses a conflict
  double fpr = 0.05;  // detector false alarm
  double eps = 0.1;   // baseline error
  double beta = 0.2;  // error after the conflict branch
  double zeta = 0.6;  // error on undetected noise

  void validate() const;        // DomainError when any field is outside [0, 1]
  bool beta_below_eps() const;  // flags the case the bound does not cover
};

double exact_gap(const PipelineParams& p);
double upper_bound(const PipelineParams& p);

enum class Branch { r0d0, r0d1, r1d0, r1d1 };

struct SimResult {
  double delta_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> branch_counts;  // keys R0D0, R0D1, R1D0, R1D1
};

inline constexpr std::uint64_t kShardSize = 65536;

// Trials are split into fixed-size shards; shard k draws from stream (seed, k).
SimResult simulate(const PipelineParams& p, std::uint64_t n, std::uint64_t seed);

// Same partition with the detector replaced by a caller-supplied decision on
// whether the retrieved context is noisy.
using Detector = std::function<bool(bool noisy, std::uint64_t trial)>;
SimResult simulate_with_detector(const PipelineParams& p, std::uint64_t n, std::uint64_t seed, const Detector& detect);

struct DominanceReport {
  double miss_term = 0.0;    // rho * fnr
  double branch_term = 0.0;  // beta * (rho (1 - fnr) + (1 - rho) fpr)
  double noisy_branch = 0.0;   // beta * rho * (1 - fnr)
  double clean_branch = 0.0;   // beta * (1 - rho) * fpr
  double upper_bound = 0.0;
  std::string dominant;      // "miss" or "branch"
};

DominanceReport dominance_report(const PipelineParams& p);

inline constexpr std::array<const char*, 6> kParamNames = {"rho", "fnr", "fpr", "eps", "beta", "zeta"};

// Cartesian grid over {param: [values]}; unspecified params keep their defaults.
// The last parameter in kParamNames order varies fastest.
std::vector<PipelineParams> expand_grid(const json& spec, const PipelineParams& defaults = {});

struct SweepRow {
  PipelineParams params;
  double exact_gap = 0.0;
  double upper_bound = 0.0;
  SimResult sim;
};

std::vector<SweepRow> bound_sweep(const json& spec, std::uint64_t n, std::uint64_t seed);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace tcr::theory
