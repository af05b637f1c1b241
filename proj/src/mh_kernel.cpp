#include "mlmcmc/mh_kernel.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace mlmcmc {

AdaptState AdaptState::initial(const ParamVector& theta0, double target_alpha, double gamma_exponent) {
  const auto d = theta0.size();
  AdaptState a;
  a.log_lambda = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  a.mu = theta0;
  a.sigma = Matrix::Identity(d, d);
  a.target_alpha = target_alpha;
  a.gamma_exponent = gamma_exponent;
  return a;
}

double AdaptState::lambda() const { return std::exp(log_lambda); }

double AdaptState::gamma(std::uint64_t iter) const {
  return std::pow(static_cast<double>(iter) + 1.0, -gamma_exponent);
}

RwProposal rw_propose_with(const ChainState& state, double scale, const Matrix& sigma_chol, const ParamVector& z) {
  RwProposal p;
  p.proposal = state.theta + scale * (sigma_chol * z);
  // Symmetric kernel: forward and reverse densities cancel exactly.
  p.log_q_fwd = 0.0;
  p.log_q_rev = 0.0;
  return p;
}

RwProposal rw_propose(const ChainState& state, double scale, const Matrix& sigma, RngStream& rng) {
  return rw_propose_with(state, scale, cholesky_psd(sigma), standard_normal(state.theta.size(), rng));
}

StepResult mh_decide(const ChainState& state, const LogTarget& target, const RwProposal& prop, double u) {
  const double log_pi_prop = eval_checked(target, prop.proposal);
  const Acceptance acc = mh_accept_prob(state.log_pi, log_pi_prop, prop.log_q_fwd, prop.log_q_rev);
  StepResult r{state, false, acc.alpha};
  r.state.iter = state.iter + 1;
  if (u < acc.alpha) {
    r.state.theta = prop.proposal;
    r.state.log_pi = log_pi_prop;
    r.accepted = true;
  }
  return r;
}

StepResult mh_step(const ChainState& state, const LogTarget& target, double scale, const Matrix& sigma_chol,
                   RngStream& rng) {
  const RwProposal prop = rw_propose_with(state, scale, sigma_chol, standard_normal(state.theta.size(), rng));
  return mh_decide(state, target, prop, rng.uniform());
}

AdaptState adapt_update(const AdaptState& adapt, double alpha, const ParamVector& new_theta, std::uint64_t iter) {
  AdaptState next = adapt;
  const double g = adapt.gamma(iter);
  next.log_lambda = adapt.log_lambda + g * (alpha - adapt.target_alpha);
  const ParamVector dev = new_theta - adapt.mu;
  next.mu = adapt.mu + g * dev;
  Matrix s = adapt.sigma + g * (dev * dev.transpose() - adapt.sigma);
  next.sigma = 0.5 * (s + s.transpose());
  return next;
}

namespace {

// Cholesky of the adapted covariance; an unfactorizable state is reset to I.
Matrix adapted_chol(AdaptState& adapt) {
  try {
    return cholesky_psd(adapt.sigma);
  } catch (const NumericalError&) {
    adapt.sigma = Matrix::Identity(adapt.sigma.rows(), adapt.sigma.cols());
    return adapt.sigma;
  }
}

}  // namespace

ChainRun run_adaptive_chain(const LogTarget& target, const ChainOptions& opts, const AdaptState& adapt0,
                            const ParamVector& theta0, RngStream& rng) {
  if (opts.n <= opts.burn_in) throw NumericalError("run_adaptive_chain: n must exceed burn_in");
  if (theta0.size() != target.dim()) throw NumericalError("run_adaptive_chain: theta0 dimension mismatch");

  ChainRun run;
  run.samples.reserve(opts.n - opts.burn_in);
  run.diagnostics.accepted.reserve(opts.n - opts.burn_in);

  AdaptState adapt = adapt0;
  ChainState state = ChainState::start(target, theta0);
  run.diagnostics.burn_in_state = state;
  Matrix chol = adapted_chol(adapt);
  std::uint64_t burn_accepts = 0, post_accepts = 0, reject_streak = 0;

  for (std::uint64_t i = 0; i < opts.n; ++i) {
    const bool burning = i < opts.burn_in;
    StepResult step = mh_step(state, target, adapt.lambda(), chol, rng);
    state = std::move(step.state);
    assert(state.log_pi == target(state.theta));

    reject_streak = step.accepted ? 0 : reject_streak + 1;
    if (opts.max_consecutive_rejects > 0 && reject_streak >= opts.max_consecutive_rejects)
      throw ModelError("chain rejected " + std::to_string(reject_streak) + " consecutive proposals at iteration " +
                       std::to_string(i));

    if (burning) {
      burn_accepts += step.accepted;
      if (opts.adapt) {
        adapt = adapt_update(adapt, step.alpha, state.theta, adapt.clock + state.iter);
        chol = adapted_chol(adapt);
      }
      if (i + 1 == opts.burn_in) run.diagnostics.burn_in_state = state;
    } else {
      post_accepts += step.accepted;
      run.samples.push_back(state.theta);
      run.diagnostics.accepted.push_back(step.accepted);
    }
  }

  const auto n_post = opts.n - opts.burn_in;
  run.diagnostics.acceptance_rate = static_cast<double>(post_accepts) / static_cast<double>(n_post);
  run.diagnostics.burn_in_acceptance_rate =
      opts.burn_in > 0 ? static_cast<double>(burn_accepts) / static_cast<double>(opts.burn_in) : 0.0;
  run.diagnostics.final_adapt = adapt;
  run.diagnostics.final_state = state;
  return run;
}

}  // namespace mlmcmc
