#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"
#include "tcr/theory/theory.hpp"

using namespace tcr;
using namespace tcr::theory;

namespace {

// Pr[G=1] by total probability over the four (R, D) branches, minus eps.
long double partition_gap(const PipelineParams& p) {
  long double r = p.rho, a = p.fnr, g = p.fpr, e = p.eps, b = p.beta, z = p.zeta;
  long double pr_g = (1 - r) * (1 - g) * e + (1 - r) * g * b + r * (1 - a) * b + r * a * z;
  return pr_g - e;
}

PipelineParams random_params(Rng& r) {
  PipelineParams p;
  p.rho = r.uniform();
  p.fnr = r.uniform();
  p.fpr = r.uniform();
  p.eps = r.uniform();
  p.beta = r.uniform();
  p.zeta = r.uniform();
  return p;
}

}  // namespace

TEST_CASE("exact gap examples") {
  PipelineParams p;
  p.rho = 0;
  p.fpr = 0;
  CHECK(exact_gap(p) == 0.0);
  CHECK(upper_bound(p) == 0.0);
  p.fpr = 0.05;
  CHECK(exact_gap(p) == doctest::Approx(0.05 * (0.2 - 0.1)).epsilon(1e-15));

  PipelineParams q{0.3, 0.1, 0.05, 0.1, 0.2, 0.6};
  double direct = 0.7 * 0.05 * (0.2 - 0.1) + 0.3 * (0.9 * 0.2 + 0.1 * 0.6 - 0.1);
  CHECK(exact_gap(q) == doctest::Approx(direct).epsilon(1e-15));
  CHECK(std::abs(exact_gap(q) - static_cast<double>(partition_gap(q))) <= 1e-15);

  auto sim = simulate(q, 1000000, 42);
  CHECK(std::abs(sim.delta_hat - exact_gap(q)) <= 3 * sim.std_error);
}

TEST_CASE("tightness at zeta = 1, eps = 0") {
  PipelineParams p{0.5, 0.2, 0.1, 0.0, 0.3, 1.0};
  CHECK(std::abs(exact_gap(p) - upper_bound(p)) <= 1e-12);
  Rng r(17);
  for (int i = 0; i < 10000; ++i) {
    auto q = random_params(r);
    q.zeta = 1.0;
    q.eps = 0.0;
    CHECK(std::abs(exact_gap(q) - upper_bound(q)) <= 1e-12);
  }
}

TEST_CASE("bound holds over 1e5 draws") {
  Rng r(2024);
  int checked = 0, flagged = 0;
  for (int i = 0; i < 100000; ++i) {
    auto p = random_params(r);
    if (p.beta_below_eps()) {
      ++flagged;
      continue;
    }
    ++checked;
    REQUIRE(exact_gap(p) <= upper_bound(p) + 1e-12);
    REQUIRE(std::abs(exact_gap(p) - static_cast<double>(partition_gap(p))) <= 1e-12);
  }
  CHECK(checked + flagged == 100000);
  CHECK(checked > 40000);
}

TEST_CASE("exact gap is monotone in beta and zeta") {
  Rng r(5);
  for (int i = 0; i < 20000; ++i) {
    auto p = random_params(r);
    auto q = p;
    q.beta = p.beta + (1 - p.beta) * r.uniform();
    CHECK(exact_gap(q) >= exact_gap(p) - 1e-15);
    q = p;
    q.zeta = p.zeta + (1 - p.zeta) * r.uniform();
    CHECK(exact_gap(q) >= exact_gap(p) - 1e-15);
  }
}

TEST_CASE("parameter validation") {
  PipelineParams p;
  p.fnr = 1.2;
  CHECK_THROWS_AS(exact_gap(p), DomainError);
  CHECK_THROWS_AS(upper_bound(p), DomainError);
  p.fnr = std::nan("");
  CHECK_THROWS_AS(exact_gap(p), DomainError);
  CHECK_THROWS_AS(simulate(PipelineParams{}, 999, 1), DomainError);
  PipelineParams flag;
  flag.beta = 0.05;
  flag.eps = 0.1;
  CHECK(flag.beta_below_eps());
}

TEST_CASE("simulation with zero error rates") {
  PipelineParams p{0.4, 0.0, 0.0, 0.0, 0.0, 0.0};
  auto s = simulate(p, 10000, 3);
  CHECK(s.delta_hat == 0.0);
  CHECK(s.std_error == 0.0);
}

TEST_CASE("monte carlo agrees with the exact gap") {
  Rng r(99);
  int within = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 20; ++i) {
    auto p = random_params(r);
    auto s = simulate(p, 200000, 1000 + i);
    within += std::abs(s.delta_hat - exact_gap(p)) <= 4 * s.std_error;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(within >= 19);
  CHECK(secs < 30.0);
}

TEST_CASE("simulation is deterministic with consistent branch counts") {
  PipelineParams p{0.3, 0.1, 0.05, 0.1, 0.2, 0.6};
  auto a = simulate(p, 200000, 7);
  auto b = simulate(p, 200000, 7);
  CHECK(a.delta_hat == b.delta_hat);
  CHECK(a.branch_counts == b.branch_counts);
  CHECK(simulate(p, 200000, 8).delta_hat != a.delta_hat);
  CHECK(a.n == 200000);
  CHECK(a.seed == 7);

  std::uint64_t total = 0;
  for (const auto& [k, v] : a.branch_counts) total += v;
  CHECK(total == 200000);
  const std::map<std::string, double> expected = {{"R0D0", 0.7 * 0.95},
                                                  {"R0D1", 0.7 * 0.05},
                                                  {"R1D0", 0.3 * 0.1},
                                                  {"R1D1", 0.3 * 0.9}};
  for (const auto& [k, prob] : expected) {
    double n = 200000.0;
    double sigma = std::sqrt(n * prob * (1 - prob));
    CHECK(std::abs(static_cast<double>(a.branch_counts.at(k)) - n * prob) <= 4 * sigma);
  }
}

TEST_CASE("standard error scales as 1/sqrt(n)") {
  PipelineParams p{0.3, 0.1, 0.05, 0.1, 0.2, 0.6};
  double s1 = simulate(p, 10000, 11).std_error;
  double s2 = simulate(p, 40000, 11).std_error;
  double s3 = simulate(p, 160000, 11).std_error;
  CHECK(s1 / s2 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(s2 / s3 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("simulation with a supplied detector") {
  PipelineParams p{0.3, 0.1, 0.05, 0.1, 0.2, 0.6};
  // a perfect detector: the gap reduces to rho (beta - eps)
  auto s = simulate_with_detector(p, 200000, 5, [](bool noisy, std::uint64_t) { return noisy; });
  CHECK(s.branch_counts["R1D0"] == 0);
  CHECK(s.branch_counts["R0D1"] == 0);
  double want = 0.3 * (0.2 - 0.1);
  CHECK(std::abs(s.delta_hat - want) <= 4 * s.std_error);
}

TEST_CASE("dominance report") {
  PipelineParams p{0.3, 0.1, 0.001, 0.1, 0.1, 0.6};
  auto d = dominance_report(p);
  CHECK(d.miss_term == doctest::Approx(0.03).epsilon(1e-15));
  CHECK(d.noisy_branch == doctest::Approx(0.1 * 0.3 * 0.9).epsilon(1e-15));
  CHECK(d.clean_branch == doctest::Approx(0.1 * 0.7 * 0.001).epsilon(1e-15));
  CHECK(d.branch_term == doctest::Approx(d.noisy_branch + d.clean_branch).epsilon(1e-15));
  CHECK(d.upper_bound == doctest::Approx(upper_bound(p)).epsilon(1e-15));
  CHECK(d.dominant == "miss");

  PipelineParams clean{0.0, 0.1, 0.2, 0.1, 0.3, 0.6};
  auto c = dominance_report(clean);
  CHECK(c.miss_term == 0.0);
  CHECK(c.noisy_branch == 0.0);
  CHECK(c.branch_term == doctest::Approx(0.3 * 0.2));
  CHECK(c.dominant == "branch");
}

TEST_CASE("grid expansion and sweep CSV") {
  auto grid = expand_grid(json::parse(R"({"rho": [0, 0.5], "zeta": [0.2, 0.4, 1.0]})"));
  REQUIRE(grid.size() == 6);
  CHECK(grid[0].rho == 0.0);
  CHECK(grid[0].zeta == 0.2);
  CHECK(grid[1].zeta == 0.4);
  CHECK(grid[3].rho == 0.5);
  CHECK(grid[3].fnr == PipelineParams{}.fnr);
  CHECK(expand_grid(json::object()).size() == 1);
  CHECK_THROWS_AS(expand_grid(json::parse(R"({"alpha": [0.1]})")), ConfigError);
  CHECK_THROWS_AS(expand_grid(json::parse(R"({"rho": []})")), ConfigError);
  CHECK_THROWS_AS(expand_grid(json::parse(R"({"rho": ["x"]})")), ConfigError);
  CHECK_THROWS_AS(expand_grid(json::parse("[1]")), ConfigError);

  auto rows = bound_sweep(json::parse(R"({"rho": [0.0, 0.3]})"), 20000, 1);
  auto csv = sweep_to_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "rho,fnr,fpr,eps,beta,zeta,exact_gap,upper_bound,delta_hat,stderr");
  int n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 2);
  CHECK(rows[0].exact_gap == doctest::Approx(0.05 * (0.2 - 0.1)));
  CHECK(sweep_to_csv(bound_sweep(json::parse(R"({"rho": [0.0, 0.3]})"), 20000, 1)) == csv);
}
