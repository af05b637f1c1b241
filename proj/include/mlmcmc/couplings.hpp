#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mlmcmc/density.hpp"
#include "mlmcmc/mh_kernel.hpp"

namespace mlmcmc {

/// Two chains advancing in lockstep: level `level` (fine) and level - 1.
struct CoupledState {
  ChainState fine;
  ChainState coarse;
  int level = 1;
};

/// Joint proposal together with the four log proposal densities the two
/// accept/reject decisions need.
struct CouplingProposal {
  ParamVector prop_fine;
  ParamVector prop_coarse;
  double log_q_fine_fwd = 0.0;
  double log_q_fine_rev = 0.0;
  double log_q_coarse_fwd = 0.0;
  double log_q_coarse_rev = 0.0;
};

enum class ResyncKind { Independent, Coarse };

/// Per-level resynchronization weights omega_1..omega_L.
struct ResyncSchedule {
  std::vector<double> weights;  // weights[l - 1] is omega_l
  ResyncKind kind = ResyncKind::Independent;

  double weight(int level) const;
  bool non_decreasing() const;

  /// omega_l = max(0, (l - L/2) / L).
  static ResyncSchedule default_for(int max_level);
};

// ---------------------------------------------------------------------------
// Coarse proposal (subsampled coarse chain).

/// Random-walk sub-chain on the coarse posterior whose endpoint is proposed
/// to both levels. The fine chain then runs an independence-type test
/// against the coarse density, which is biased unless the endpoint is an
/// exact draw from the coarse posterior.
struct CoarseSubchain {
  const LogTarget* target = nullptr;
  double scale = 1.0;
  Matrix sigma_chol;
  int t_sub = 1;
  /// Optional sink for every inner-step position (first coordinate), used
  /// to estimate the sub-chain's autocorrelation time during burn-in.
  std::vector<double>* trace = nullptr;
};

CouplingProposal coarse_proposal_step(const CoarseSubchain& sub, const CoupledState& state, RngStream& rng);

// ---------------------------------------------------------------------------
// Independent proposal.

CouplingProposal independent_proposal_step(const GaussianSpec& imh, const CoupledState& state, RngStream& rng);

// ---------------------------------------------------------------------------
// Maximal (gamma) coupling.

struct MaximalDraw {
  ParamVector x;  // ~ p
  ParamVector y;  // ~ q
  bool met = false;
};

inline constexpr int kMaxCouplingTries = 1'000'000;

/// Rejection sampler for a maximal coupling of p and q; P(met) = 1 - TV(p, q).
MaximalDraw maximal_coupling_sample(const GaussianSpec& p, const GaussianSpec& q, RngStream& rng);

/// Maximally coupled random-walk proposals
/// N(fine, scale_f^2 sigma_f) and N(coarse, scale_c^2 sigma_c).
CouplingProposal maximal_coupling_step(const CoupledState& state, double scale_f, double scale_c,
                                       const Matrix& sigma_f_chol, const Matrix& sigma_c_chol, RngStream& rng);

// ---------------------------------------------------------------------------
// SYNCE.

/// Shared increment eta ~ N(0, C) added to both chains.
CouplingProposal synce_step(const CoupledState& state, const Matrix& c_chol, RngStream& rng);

/// Mean and covariance of the resynchronization proposal. Unset fields are
/// filled from the averaged adaptation states.
struct ResyncSpec {
  std::optional<ParamVector> mean;
  std::optional<Matrix> covariance;
};

struct SynceArProposal {
  CouplingProposal proposal;
  bool used_resync = false;
};

/// Adapted SYNCE with probabilistic resynchronization. Always draws the
/// mixture uniform and the shared standard normal first, so the RNG budget
/// of the SYNCE branch does not depend on omega.
SynceArProposal synce_ar_step(const CoupledState& state, const AdaptState& adapt_f, const AdaptState& adapt_c,
                              const Matrix& sigma_f_chol, const Matrix& sigma_c_chol, double omega,
                              const ResyncSpec& resync, RngStream& rng);

// ---------------------------------------------------------------------------
// Shared accept/reject.

struct CoupledStep {
  CoupledState state;
  bool accept_fine = false;
  bool accept_coarse = false;
  double alpha_fine = 0.0;
  double alpha_coarse = 0.0;
};

/// Both levels accept or reject with one common uniform u.
CoupledStep coupled_accept_reject(const CoupledState& state, const CouplingProposal& prop, const LogTarget& fine,
                                  const LogTarget& coarse, double u);

inline CoupledStep coupled_accept_reject(const CoupledState& state, const CouplingProposal& prop,
                                         const LogTarget& fine, const LogTarget& coarse, RngStream& rng) {
  return coupled_accept_reject(state, prop, fine, coarse, rng.uniform());
}

}  // namespace mlmcmc
