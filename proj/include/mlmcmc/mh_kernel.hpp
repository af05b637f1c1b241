#pragma once

#include <cstdint>
#include <vector>

#include "mlmcmc/density.hpp"

namespace mlmcmc {

/// A chain position with its cached log density.
struct ChainState {
  ParamVector theta;
  double log_pi = kNegInf;
  std::uint64_t iter = 0;

  static ChainState start(const LogTarget& target, ParamVector theta0) {
    ChainState s{std::move(theta0), 0.0, 0};
    s.log_pi = eval_checked(target, s.theta);
    return s;
  }
};

/// Robbins-Monro adaptation state for a random-walk proposal
/// theta + exp(log_lambda) * chol(sigma) * z.
struct AdaptState {
  double log_lambda = 0.0;
  ParamVector mu;
  Matrix sigma;
  double target_alpha = 0.44;
  double gamma_exponent = 0.7;
  /// Adaptation iterations absorbed before the current chain started. A
  /// warm-started chain adds this to its own iteration count in gamma().
  std::uint64_t clock = 0;

  /// lambda = 2.38 / sqrt(d), sigma = I, mu = theta0.
  static AdaptState initial(const ParamVector& theta0, double target_alpha = 0.44, double gamma_exponent = 0.7);

  double lambda() const;
  /// Step size used when the chain has completed `iter` iterations.
  double gamma(std::uint64_t iter) const;

  bool operator==(const AdaptState&) const = default;
};

struct RwProposal {
  ParamVector proposal;
  double log_q_fwd = 0.0;
  double log_q_rev = 0.0;
};

/// theta + scale * chol(sigma) * z with the supplied standard-normal z.
RwProposal rw_propose_with(const ChainState& state, double scale, const Matrix& sigma_chol, const ParamVector& z);

/// Symmetric random-walk proposal drawing z from rng.
RwProposal rw_propose(const ChainState& state, double scale, const Matrix& sigma, RngStream& rng);

struct StepResult {
  ChainState state;
  bool accepted = false;
  double alpha = 0.0;
};

/// One Metropolis-Hastings transition with a random-walk proposal.
/// Consumes d normals and then one uniform from rng.
StepResult mh_step(const ChainState& state, const LogTarget& target, double scale, const Matrix& sigma_chol,
                   RngStream& rng);

/// Accept/reject an already generated proposal with the supplied uniform.
StepResult mh_decide(const ChainState& state, const LogTarget& target, const RwProposal& prop, double u);

/// Apply the three Robbins-Monro recursions (log-scale, mean, covariance)
/// with gamma = (iter + 1)^-gamma_exponent.
AdaptState adapt_update(const AdaptState& adapt, double alpha, const ParamVector& new_theta, std::uint64_t iter);

struct ChainDiagnostics {
  double acceptance_rate = 0.0;  // post burn-in
  double burn_in_acceptance_rate = 0.0;
  AdaptState final_adapt;
  ChainState final_state;
  /// State at the end of burn-in (the starting point if burn_in == 0).
  ChainState burn_in_state;
  std::vector<bool> accepted;  // post burn-in accept flags
};

struct ChainRun {
  std::vector<ParamVector> samples;
  ChainDiagnostics diagnostics;
};

struct ChainOptions {
  std::uint64_t n = 0;
  std::uint64_t burn_in = 0;
  bool adapt = true;
  /// Abort when this many consecutive proposals are rejected (0 disables).
  std::uint64_t max_consecutive_rejects = 0;
};

/// Random-walk MH with adaptation confined to burn-in; returns the n - burn_in
/// post burn-in samples.
ChainRun run_adaptive_chain(const LogTarget& target, const ChainOptions& opts, const AdaptState& adapt,
                            const ParamVector& theta0, RngStream& rng);

}  // namespace mlmcmc
