#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlmcmc/couplings.hpp"
#include "mlmcmc/density.hpp"
#include "mlmcmc/mh_kernel.hpp"

namespace mlmcmc {

using Qoi = std::function<double(const ParamVector&)>;

/// One level of the hierarchy.
struct LevelSpec {
  int level = 0;
  LogTarget target;
  Qoi qoi;
  double cost_per_eval = 1.0;
  std::uint64_t n_samples = 0;
  std::uint64_t burn_in = 0;
};

enum class CouplingMethod { Coarse, Independent, Maximal, Synce, SynceA, SynceAR };

std::string_view to_string(CouplingMethod m);
std::optional<CouplingMethod> coupling_from_string(std::string_view s);

/// Everything the coupled levels need besides the targets. Per-level vectors
/// are indexed by level (0..L); empty vectors fall back to the defaults noted.
struct CouplingConfig {
  CouplingMethod method = CouplingMethod::Synce;
  /// Random-walk covariance: C_l for SYNCE, the proposal for maximal
  /// coupling, the coarse sub-chain kernel, and the starting Sigma for
  /// adaptive chains. Default identity.
  std::vector<Matrix> proposal_cov;
  /// Independent proposal per level (level 0 entry unused).
  std::vector<std::optional<GaussianSpec>> independent;
  ResyncSchedule schedule;
  std::vector<ResyncSpec> resync;  // default: averaged adaptation states
  /// Coarse-proposal sub-sampling lag; 0 = integer ceiling of the coarse
  /// sub-chain's integrated autocorrelation time, re-estimated in burn-in.
  int t_sub = 0;
  std::vector<double> target_alpha;  // default 0.44
  double gamma_exponent = 0.7;
  /// Adapt the level-0 chain during its burn-in. When false it runs with a
  /// fixed N(., proposal_cov[0]) random walk.
  bool adapt_level0 = true;
  /// Starting point; default zero vector (the prior mean for the models here).
  std::optional<ParamVector> theta0;
  /// Abort a level when both chains reject this many times in a row (0 disables).
  std::uint64_t max_stuck = 1000;

  Matrix cov(int level, Eigen::Index dim) const;
  double alpha(int level) const;
};

struct LevelRun {
  int level = 0;
  std::vector<double> q_fine;
  std::vector<double> q_coarse;  // empty at level 0
  std::vector<ParamVector> theta_fine;
  std::vector<ParamVector> theta_coarse;
  std::vector<bool> accept_fine;
  std::vector<bool> accept_coarse;
  double acceptance_fine = 0.0;
  double acceptance_coarse = 0.0;
  std::optional<double> rho;
  double y_mean = 0.0;
  double y_var = 0.0;
  double y_ess = 0.0;
  double resync_rate = 0.0;
  int t_sub = 0;
  double cost = 0.0;

  std::size_t size() const { return q_fine.size(); }
  /// Y_l samples: q_fine - q_coarse (q_fine at level 0).
  std::vector<double> differences() const;
};

struct MLMCResult {
  std::vector<LevelRun> per_level;
  double estimate = 0.0;
  double estimator_variance = 0.0;
  double total_cost = 0.0;
};

struct Combined {
  double estimate = 0.0;
  double estimator_variance = 0.0;
};

/// Recompute rho, y_mean, y_var, y_ess and acceptance rates from the stored
/// sample streams.
void summarize_level(LevelRun& run);

/// Telescoping sum of level means; the variance divides each level's sample
/// variance by its effective sample size.
Combined combine_estimate(const std::vector<LevelRun>& per_level);

/// Samples per level minimizing cost for a target standard error.
std::vector<std::uint64_t> optimal_allocation(const std::vector<double>& variances, const std::vector<double>& costs,
                                              double target_se);

/// Single-chain level-0 run.
LevelRun run_base_level(const LevelSpec& spec, const CouplingConfig& cfg, const ParamVector& theta0,
                        RngStream& rng, ChainDiagnostics* diag = nullptr);

/// Where a coupled level starts and what it inherits from the level below.
struct LevelStart {
  ParamVector theta_fine;
  ParamVector theta_coarse;
  std::optional<AdaptState> adapt;  // warm start for both chains
};

struct CoupledDiagnostics {
  ChainState fine_burn_in;
  AdaptState adapt_fine;
  AdaptState adapt_coarse;
};

/// Run the coupled chain for levels (fine, coarse) with the configured coupling.
LevelRun run_coupled_level(const LevelSpec& fine, const LevelSpec& coarse, const CouplingConfig& cfg,
                           const LevelStart& start, RngStream& rng, CoupledDiagnostics* diag = nullptr);

/// Full multilevel run over levels 0..L; deterministic given seed.
MLMCResult run_ml_mcmc(const std::vector<LevelSpec>& levels, const CouplingConfig& cfg, std::uint64_t seed,
                       std::uint64_t stream = 0);

}  // namespace mlmcmc
