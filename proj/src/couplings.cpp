#include "mlmcmc/couplings.hpp"

#include <algorithm>
#include <cmath>

namespace mlmcmc {

double ResyncSchedule::weight(int level) const {
  if (level < 1 || static_cast<std::size_t>(level) > weights.size()) return 0.0;
  return weights[static_cast<std::size_t>(level - 1)];
}

bool ResyncSchedule::non_decreasing() const { return std::is_sorted(weights.begin(), weights.end()); }

ResyncSchedule ResyncSchedule::default_for(int max_level) {
  ResyncSchedule s;
  for (int l = 1; l <= max_level; ++l)
    s.weights.push_back(std::max(0.0, (l - 0.5 * max_level) / static_cast<double>(max_level)));
  return s;
}

CouplingProposal coarse_proposal_step(const CoarseSubchain& sub, const CoupledState& state, RngStream& rng) {
  if (sub.t_sub < 1) throw NumericalError("coarse_proposal_step: t_sub must be at least 1");
  if (sub.target == nullptr) throw NumericalError("coarse_proposal_step: no coarse target");
  const LogTarget& coarse = *sub.target;

  ChainState walker = state.coarse;
  for (int k = 0; k < sub.t_sub; ++k) {
    walker = mh_step(walker, coarse, sub.scale, sub.sigma_chol, rng).state;
    if (sub.trace != nullptr) sub.trace->push_back(walker.theta[0]);
  }

  // Both levels use the (unnormalized) coarse posterior as proposal density;
  // its normalizing constant cancels between numerator and denominator.
  CouplingProposal p;
  p.prop_fine = walker.theta;
  p.prop_coarse = walker.theta;
  p.log_q_fine_fwd = walker.log_pi;
  p.log_q_fine_rev = eval_checked(coarse, state.fine.theta);
  p.log_q_coarse_fwd = walker.log_pi;
  p.log_q_coarse_rev = state.coarse.log_pi;
  return p;
}

CouplingProposal independent_proposal_step(const GaussianSpec& imh, const CoupledState& state, RngStream& rng) {
  const ParamVector draw = sample_gaussian(imh, rng);
  const double log_q_star = log_gaussian_pdf(draw, imh);
  CouplingProposal p;
  p.prop_fine = draw;
  p.prop_coarse = draw;
  p.log_q_fine_fwd = log_q_star;
  p.log_q_coarse_fwd = log_q_star;
  p.log_q_fine_rev = log_gaussian_pdf(state.fine.theta, imh);
  p.log_q_coarse_rev = log_gaussian_pdf(state.coarse.theta, imh);
  return p;
}

MaximalDraw maximal_coupling_sample(const GaussianSpec& p, const GaussianSpec& q, RngStream& rng) {
  MaximalDraw out;
  out.x = sample_gaussian(p, rng);
  const double log_w = std::log(rng.uniform()) + log_gaussian_pdf(out.x, p);
  if (log_w <= log_gaussian_pdf(out.x, q)) {
    out.y = out.x;
    out.met = true;
    return out;
  }
  for (int tries = 0; tries < kMaxCouplingTries; ++tries) {
    ParamVector y = sample_gaussian(q, rng);
    const double log_w_star = std::log(rng.uniform()) + log_gaussian_pdf(y, q);
    if (log_w_star > log_gaussian_pdf(y, p)) {
      out.y = std::move(y);
      return out;
    }
  }
  throw NumericalError("maximal_coupling_sample: residual sampler exceeded iteration cap");
}

CouplingProposal maximal_coupling_step(const CoupledState& state, double scale_f, double scale_c,
                                       const Matrix& sigma_f_chol, const Matrix& sigma_c_chol, RngStream& rng) {
  const auto pf = GaussianSpec::from_chol(state.fine.theta, scale_f * sigma_f_chol);
  const auto pc = GaussianSpec::from_chol(state.coarse.theta, scale_c * sigma_c_chol);
  MaximalDraw draw = maximal_coupling_sample(pf, pc, rng);
  CouplingProposal p;
  p.prop_fine = std::move(draw.x);
  p.prop_coarse = std::move(draw.y);
  // Marginally each proposal is a symmetric random walk.
  return p;
}

CouplingProposal synce_step(const CoupledState& state, const Matrix& c_chol, RngStream& rng) {
  const ParamVector eta = c_chol * standard_normal(state.fine.theta.size(), rng);
  CouplingProposal p;
  p.prop_fine = state.fine.theta + eta;
  p.prop_coarse = state.coarse.theta + eta;
  return p;
}

SynceArProposal synce_ar_step(const CoupledState& state, const AdaptState& adapt_f, const AdaptState& adapt_c,
                              const Matrix& sigma_f_chol, const Matrix& sigma_c_chol, double omega,
                              const ResyncSpec& resync, RngStream& rng) {
  const double w = rng.uniform();
  const ParamVector eta = standard_normal(state.fine.theta.size(), rng);
  SynceArProposal out;
  if (w < omega) {
    const ParamVector mean = resync.mean ? *resync.mean : ParamVector(0.5 * (adapt_f.mu + adapt_c.mu));
    const Matrix cov = resync.covariance ? *resync.covariance : Matrix(0.5 * (adapt_f.sigma + adapt_c.sigma));
    out.proposal = independent_proposal_step(GaussianSpec(mean, cov), state, rng);
    out.used_resync = true;
    return out;
  }
  out.proposal.prop_fine = state.fine.theta + adapt_f.lambda() * (sigma_f_chol * eta);
  out.proposal.prop_coarse = state.coarse.theta + adapt_c.lambda() * (sigma_c_chol * eta);
  return out;
}

CoupledStep coupled_accept_reject(const CoupledState& state, const CouplingProposal& prop, const LogTarget& fine,
                                  const LogTarget& coarse, double u) {
  CoupledStep r{state};
  r.state.fine.iter += 1;
  r.state.coarse.iter += 1;

  const double lp_fine = eval_checked(fine, prop.prop_fine);
  const double lp_coarse = eval_checked(coarse, prop.prop_coarse);
  r.alpha_fine = mh_accept_prob(state.fine.log_pi, lp_fine, prop.log_q_fine_fwd, prop.log_q_fine_rev).alpha;
  r.alpha_coarse = mh_accept_prob(state.coarse.log_pi, lp_coarse, prop.log_q_coarse_fwd, prop.log_q_coarse_rev).alpha;

  if (u < r.alpha_fine) {
    r.state.fine.theta = prop.prop_fine;
    r.state.fine.log_pi = lp_fine;
    r.accept_fine = true;
  }
  if (u < r.alpha_coarse) {
    r.state.coarse.theta = prop.prop_coarse;
    r.state.coarse.log_pi = lp_coarse;
    r.accept_coarse = true;
  }
  return r;
}

}  // namespace mlmcmc
