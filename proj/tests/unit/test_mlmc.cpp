#include "doctest.h"
#include "mlmcmc/diagnostics.hpp"
#include "mlmcmc/errors.hpp"
#include "mlmcmc/mlmc.hpp"
#include "mlmcmc/models.hpp"

#include <cmath>
#include <vector>

using namespace mlmcmc;

namespace {

LevelRun level_with(double y_mean, double y_var, double y_ess) {
  LevelRun r;
  r.y_mean = y_mean;
  r.y_var = y_var;
  r.y_ess = y_ess;
  return r;
}

std::vector<LevelSpec> shifting_levels(int max_level, std::uint64_t n, std::uint64_t burn) {
  std::vector<LevelSpec> levels;
  for (int l = 0; l <= max_level; ++l)
    levels.push_back({l, models::shifting_target(l), [](const ParamVector& t) { return t[0]; }, 1.0, n, burn});
  return levels;
}

}  // namespace

TEST_SUITE("mlmc") {

TEST_CASE("combine_estimate sums means and ESS-scaled variances") {
  const Combined c = combine_estimate({level_with(1.0, 4.0, 100.0), level_with(-0.25, 0.5, 50.0)});
  CHECK(c.estimate == doctest::Approx(0.75));
  CHECK(c.estimator_variance == doctest::Approx(0.04 + 0.01));
  CHECK_THROWS_AS(combine_estimate({}), NumericalError);
}

TEST_CASE("zero-variance levels add nothing to the estimator variance") {
  const Combined c = combine_estimate({level_with(2.0, 1.0, 10.0), level_with(0.0, 0.0, 10.0)});
  CHECK(c.estimator_variance == doctest::Approx(0.1));
}

TEST_CASE("summarize_level computes Y statistics from the streams") {
  LevelRun r;
  r.level = 1;
  RngStream rng(5, 0);
  for (int i = 0; i < 400; ++i) {
    const double c = rng.normal();
    r.q_coarse.push_back(c);
    r.q_fine.push_back(c + 0.1 * rng.normal());
    r.accept_fine.push_back(i % 2 == 0);
    r.accept_coarse.push_back(i % 4 == 0);
  }
  summarize_level(r);
  const std::vector<double> y = r.differences();
  CHECK(r.y_mean == doctest::Approx(mean(y)));
  CHECK(r.y_var == doctest::Approx(sample_variance(r.q_fine) + sample_variance(r.q_coarse) -
                                   2.0 * sample_covariance(r.q_fine, r.q_coarse)));
  CHECK(*r.rho > 0.99);
  CHECK(r.acceptance_fine == 0.5);
  CHECK(r.acceptance_coarse == 0.25);
}

TEST_CASE("level-0 differences are the fine QoI") {
  LevelRun r;
  r.q_fine = {1.0, 2.0, 3.0};
  CHECK(r.differences() == r.q_fine);
  summarize_level(r);
  CHECK_FALSE(r.rho.has_value());
  CHECK(r.y_mean == doctest::Approx(2.0));
}

TEST_CASE("optimal allocation") {
  SUBCASE("equal levels share equally") {
    const auto n = optimal_allocation({1.0, 1.0}, {1.0, 1.0}, 0.1);
    CHECK(n[0] == 200);
    CHECK(n[1] == 200);
  }
  SUBCASE("proportional to sqrt(V/C)") {
    const auto n = optimal_allocation({4.0, 1.0}, {1.0, 4.0}, 1.0);
    // sum sqrt(VC) = 4; N_l = sqrt(V_l/C_l) * 4
    CHECK(n[0] == 8);
    CHECK(n[1] == 2);
  }
  SUBCASE("achieves the target variance") {
    const std::vector<double> v{2.0, 0.3, 0.05}, c{1.0, 4.0, 16.0};
    const auto n = optimal_allocation(v, c, 0.01);
    double var = 0.0;
    for (std::size_t l = 0; l < v.size(); ++l) var += v[l] / static_cast<double>(n[l]);
    CHECK(var <= 1e-4 * (1.0 + 1e-12));
    CHECK(var >= 0.99e-4);
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(optimal_allocation({1.0}, {1.0, 2.0}, 0.1), NumericalError);
    CHECK_THROWS_AS(optimal_allocation({0.0}, {1.0}, 0.1), NumericalError);
    CHECK_THROWS_AS(optimal_allocation({1.0}, {1.0}, 0.0), NumericalError);
  }
}

TEST_CASE("single-level run is plain MCMC") {
  CouplingConfig cfg;
  const MLMCResult r = run_ml_mcmc(shifting_levels(0, 20000, 5000), cfg, 3);
  REQUIRE(r.per_level.size() == 1);
  CHECK(r.per_level[0].size() == 15000);
  CHECK(std::abs(r.estimate - 4.0) < 0.1);
  CHECK(r.estimate == r.per_level[0].y_mean);
  CHECK(r.total_cost == 20000.0);
}

TEST_CASE("identical neighbouring targets give a zero correction") {
  std::vector<LevelSpec> levels = shifting_levels(1, 4000, 1000);
  levels[1].target = levels[0].target;
  for (CouplingMethod m : {CouplingMethod::Synce, CouplingMethod::SynceA, CouplingMethod::Maximal}) {
    CouplingConfig cfg;
    cfg.method = m;
    const MLMCResult r = run_ml_mcmc(levels, cfg, 7);
    CHECK(r.per_level[1].y_mean == 0.0);
    CHECK(r.per_level[1].y_var == 0.0);
  }
}

TEST_CASE("runs are deterministic and the estimate telescopes") {
  CouplingConfig cfg;
  cfg.method = CouplingMethod::SynceAR;
  cfg.schedule.weights = {0.2, 0.2};
  const auto levels = shifting_levels(2, 3000, 1000);
  const MLMCResult a = run_ml_mcmc(levels, cfg, 11);
  const MLMCResult b = run_ml_mcmc(levels, cfg, 11);
  const MLMCResult c = run_ml_mcmc(levels, cfg, 12);
  CHECK(a.estimate == b.estimate);
  CHECK(a.estimate != c.estimate);
  for (std::size_t l = 0; l < a.per_level.size(); ++l) CHECK(a.per_level[l].q_fine == b.per_level[l].q_fine);
  double sum = 0.0;
  for (const LevelRun& r : a.per_level) sum += mean(r.q_fine) - (r.q_coarse.empty() ? 0.0 : mean(r.q_coarse));
  CHECK(a.estimate == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("cost accounting counts both chains on coupled levels") {
  auto levels = shifting_levels(1, 1000, 200);
  levels[0].cost_per_eval = 1.0;
  levels[1].cost_per_eval = 4.0;
  CouplingConfig cfg;
  const MLMCResult r = run_ml_mcmc(levels, cfg, 1);
  CHECK(r.per_level[1].cost == 1000.0 * 5.0);
  CHECK(r.total_cost == 1000.0 + 5000.0);
}

TEST_CASE("a level where both chains keep rejecting is aborted") {
  const LogTarget spike(1, [](const ParamVector& t) { return t[0] == 0.0 ? 0.0 : kNegInf; });
  const Qoi q = [](const ParamVector& t) { return t[0]; };
  const LevelSpec fine{1, spike, q, 1.0, 5000, 100};
  const LevelSpec coarse{0, spike, q, 1.0, 5000, 100};
  CouplingConfig cfg;
  cfg.max_stuck = 200;
  RngStream rng(1, 0);
  const LevelStart start{ParamVector::Zero(1), ParamVector::Zero(1), std::nullopt};
  CHECK_THROWS_AS(run_coupled_level(fine, coarse, cfg, start, rng), ModelError);
  cfg.max_stuck = 0;
  RngStream rng2(1, 0);
  CHECK_NOTHROW(run_coupled_level(fine, coarse, cfg, start, rng2));
}

TEST_CASE("n_samples must exceed burn_in on coupled levels") {
  auto levels = shifting_levels(1, 100, 100);
  CHECK_THROWS_AS(run_ml_mcmc(levels, CouplingConfig{}, 1), NumericalError);
}

TEST_CASE("coupling names round-trip") {
  for (CouplingMethod m : {CouplingMethod::Coarse, CouplingMethod::Independent, CouplingMethod::Maximal,
                           CouplingMethod::Synce, CouplingMethod::SynceA, CouplingMethod::SynceAR})
    CHECK(coupling_from_string(to_string(m)) == m);
  CHECK_FALSE(coupling_from_string("nope").has_value());
}

}  // TEST_SUITE
