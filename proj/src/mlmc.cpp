#include "mlmcmc/mlmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "mlmcmc/diagnostics.hpp"

namespace mlmcmc {

namespace {

constexpr std::array<std::pair<CouplingMethod, std::string_view>, 6> kMethodNames{{
    {CouplingMethod::Coarse, "coarse"},
    {CouplingMethod::Independent, "independent"},
    {CouplingMethod::Maximal, "maximal"},
    {CouplingMethod::Synce, "synce"},
    {CouplingMethod::SynceA, "synce_a"},
    {CouplingMethod::SynceAR, "synce_ar"},
}};

bool is_adaptive(CouplingMethod m) { return m == CouplingMethod::SynceA || m == CouplingMethod::SynceAR; }

Matrix chol_or_reset(Matrix& sigma) {
  try {
    return cholesky_psd(sigma);
  } catch (const NumericalError&) {
    sigma = Matrix::Identity(sigma.rows(), sigma.cols());
    return sigma;
  }
}

constexpr std::uint64_t kTsubWindow = 1000;

}  // namespace

std::string_view to_string(CouplingMethod m) {
  for (const auto& [method, name] : kMethodNames)
    if (method == m) return name;
  return "unknown";
}

std::optional<CouplingMethod> coupling_from_string(std::string_view s) {
  for (const auto& [method, name] : kMethodNames)
    if (name == s) return method;
  return std::nullopt;
}

Matrix CouplingConfig::cov(int level, Eigen::Index dim) const {
  if (level >= 0 && static_cast<std::size_t>(level) < proposal_cov.size()) {
    const Matrix& c = proposal_cov[static_cast<std::size_t>(level)];
    if (c.rows() != dim || c.cols() != dim)
      throw ConfigError("proposal covariance at level " + std::to_string(level) + " has wrong shape");
    return c;
  }
  return Matrix::Identity(dim, dim);
}

double CouplingConfig::alpha(int level) const {
  if (level >= 0 && static_cast<std::size_t>(level) < target_alpha.size())
    return target_alpha[static_cast<std::size_t>(level)];
  return 0.44;
}

std::vector<double> LevelRun::differences() const {
  if (q_coarse.empty()) return q_fine;
  std::vector<double> y(q_fine.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = q_fine[i] - q_coarse[i];
  return y;
}

void summarize_level(LevelRun& run) {
  const auto rate = [](const std::vector<bool>& flags) {
    if (flags.empty()) return 0.0;
    return static_cast<double>(std::count(flags.begin(), flags.end(), true)) / static_cast<double>(flags.size());
  };
  run.acceptance_fine = rate(run.accept_fine);
  run.acceptance_coarse = rate(run.accept_coarse);
  run.rho.reset();
  run.y_mean = run.y_var = 0.0;
  run.y_ess = 0.0;
  if (run.q_fine.empty()) return;
  if (!run.q_coarse.empty() && run.q_fine.size() >= 2) run.rho = pearson(run.q_fine, run.q_coarse);
  const std::vector<double> y = run.differences();
  run.y_mean = mean(y);
  run.y_var = sample_variance(y);
  run.y_ess = y.size() >= 10 ? autocorrelation_ess(y).ess : static_cast<double>(y.size());
}

Combined combine_estimate(const std::vector<LevelRun>& per_level) {
  if (per_level.empty()) throw NumericalError("combine_estimate: no levels");
  Combined c;
  for (const LevelRun& r : per_level) {
    c.estimate += r.y_mean;
    if (r.y_var > 0.0 && r.y_ess > 0.0) c.estimator_variance += r.y_var / r.y_ess;
  }
  return c;
}

std::vector<std::uint64_t> optimal_allocation(const std::vector<double>& variances, const std::vector<double>& costs,
                                              double target_se) {
  if (variances.size() != costs.size() || variances.empty())
    throw NumericalError("optimal_allocation: variances and costs must be non-empty and equal length");
  if (!(target_se > 0.0)) throw NumericalError("optimal_allocation: target_se must be positive");
  double sum = 0.0;
  for (std::size_t l = 0; l < variances.size(); ++l) {
    if (!(variances[l] > 0.0) || !(costs[l] > 0.0))
      throw NumericalError("optimal_allocation: variances and costs must be positive");
    sum += std::sqrt(variances[l] * costs[l]);
  }
  std::vector<std::uint64_t> n(variances.size());
  for (std::size_t l = 0; l < n.size(); ++l)
    n[l] = static_cast<std::uint64_t>(std::ceil(std::sqrt(variances[l] / costs[l]) * sum / (target_se * target_se)));
  return n;
}

LevelRun run_base_level(const LevelSpec& spec, const CouplingConfig& cfg, const ParamVector& theta0, RngStream& rng,
                        ChainDiagnostics* diag) {
  const auto d = spec.target.dim();
  AdaptState adapt = AdaptState::initial(theta0, cfg.alpha(spec.level), cfg.gamma_exponent);
  adapt.sigma = cfg.cov(spec.level, d);
  if (!cfg.adapt_level0) adapt.log_lambda = 0.0;

  ChainOptions opts{spec.n_samples, spec.burn_in, cfg.adapt_level0, cfg.max_stuck};
  ChainRun chain = run_adaptive_chain(spec.target, opts, adapt, theta0, rng);

  LevelRun run;
  run.level = spec.level;
  run.theta_fine = std::move(chain.samples);
  run.q_fine.reserve(run.theta_fine.size());
  double last_q = 0.0;
  for (std::size_t i = 0; i < run.theta_fine.size(); ++i) {
    // Only moved states need a fresh QoI evaluation.
    if (i == 0 || chain.diagnostics.accepted[i]) last_q = spec.qoi(run.theta_fine[i]);
    run.q_fine.push_back(last_q);
  }
  run.accept_fine = chain.diagnostics.accepted;
  run.cost = static_cast<double>(spec.n_samples) * spec.cost_per_eval;
  summarize_level(run);
  if (diag != nullptr) *diag = std::move(chain.diagnostics);
  return run;
}

LevelRun run_coupled_level(const LevelSpec& fine, const LevelSpec& coarse, const CouplingConfig& cfg,
                           const LevelStart& start, RngStream& rng, CoupledDiagnostics* diag) {
  const int level = fine.level;
  const auto d = fine.target.dim();
  if (coarse.target.dim() != d) throw NumericalError("run_coupled_level: dimension mismatch between levels");
  if (fine.n_samples <= fine.burn_in) throw NumericalError("run_coupled_level: n_samples must exceed burn_in");

  CoupledState state{ChainState::start(fine.target, start.theta_fine),
                     ChainState::start(coarse.target, start.theta_coarse), level};
  double q_f = fine.qoi(state.fine.theta);
  double q_c = coarse.qoi(state.coarse.theta);

  const Matrix cov = cfg.cov(level, d);
  const Matrix cov_chol = cholesky_psd(cov);

  AdaptState adapt_f = start.adapt ? *start.adapt : AdaptState::initial(start.theta_fine, 0.44, cfg.gamma_exponent);
  if (!start.adapt) adapt_f.sigma = cov;
  adapt_f.target_alpha = cfg.alpha(level);
  adapt_f.gamma_exponent = cfg.gamma_exponent;
  AdaptState adapt_c = adapt_f;
  if (!start.adapt) adapt_c.mu = start.theta_coarse;
  Matrix chol_f = chol_or_reset(adapt_f.sigma);
  Matrix chol_c = chol_or_reset(adapt_c.sigma);

  const double omega = cfg.method == CouplingMethod::SynceAR ? cfg.schedule.weight(level) : 0.0;
  ResyncSpec resync;
  if (static_cast<std::size_t>(level) < cfg.resync.size()) resync = cfg.resync[static_cast<std::size_t>(level)];

  const GaussianSpec* imh = nullptr;
  if (cfg.method == CouplingMethod::Independent) {
    if (static_cast<std::size_t>(level) >= cfg.independent.size() || !cfg.independent[static_cast<std::size_t>(level)])
      throw ConfigError("independent coupling needs a proposal at level " + std::to_string(level));
    imh = &*cfg.independent[static_cast<std::size_t>(level)];
  }

  std::vector<double> sub_trace;
  CoarseSubchain sub{&coarse.target, 1.0, cov_chol, cfg.t_sub > 0 ? cfg.t_sub : 1, nullptr};
  const bool auto_tsub = cfg.t_sub <= 0;

  LevelRun run;
  run.level = level;
  const auto n_post = fine.n_samples - fine.burn_in;
  run.q_fine.reserve(n_post);
  run.q_coarse.reserve(n_post);
  run.theta_fine.reserve(n_post);
  run.theta_coarse.reserve(n_post);
  run.accept_fine.reserve(n_post);
  run.accept_coarse.reserve(n_post);

  std::uint64_t stuck = 0, resyncs = 0;
  double inner_evals = 0.0;
  for (std::uint64_t i = 0; i < fine.n_samples; ++i) {
    const bool burning = i < fine.burn_in;
    CouplingProposal prop;
    bool used_resync = false;
    switch (cfg.method) {
      case CouplingMethod::Coarse:
        sub.trace = burning && auto_tsub ? &sub_trace : nullptr;
        prop = coarse_proposal_step(sub, state, rng);
        inner_evals += sub.t_sub + 1;
        break;
      case CouplingMethod::Independent:
        prop = independent_proposal_step(*imh, state, rng);
        break;
      case CouplingMethod::Maximal:
        prop = maximal_coupling_step(state, 1.0, 1.0, cov_chol, cov_chol, rng);
        break;
      case CouplingMethod::Synce:
        prop = synce_step(state, cov_chol, rng);
        break;
      case CouplingMethod::SynceA:
      case CouplingMethod::SynceAR: {
        SynceArProposal p = synce_ar_step(state, adapt_f, adapt_c, chol_f, chol_c, omega, resync, rng);
        prop = std::move(p.proposal);
        used_resync = p.used_resync;
        break;
      }
    }

    CoupledStep step = coupled_accept_reject(state, prop, fine.target, coarse.target, rng.uniform());
    state = std::move(step.state);
    if (step.accept_fine) q_f = fine.qoi(state.fine.theta);
    if (step.accept_coarse) q_c = coarse.qoi(state.coarse.theta);

    stuck = (step.accept_fine || step.accept_coarse) ? 0 : stuck + 1;
    if (cfg.max_stuck > 0 && stuck >= cfg.max_stuck)
      throw ModelError("level " + std::to_string(level) + ": both chains rejected " + std::to_string(stuck) +
                       " consecutive proposals (iteration " + std::to_string(i) + ")");

    if (burning) {
      if (is_adaptive(cfg.method)) {
        // Resync moves use a different kernel; their acceptance rates say
        // nothing about the SYNCE step size, so only mu and Sigma learn from them.
        const double log_lambda_f = adapt_f.log_lambda, log_lambda_c = adapt_c.log_lambda;
        adapt_f = adapt_update(adapt_f, step.alpha_fine, state.fine.theta, adapt_f.clock + state.fine.iter);
        adapt_c = adapt_update(adapt_c, step.alpha_coarse, state.coarse.theta, adapt_c.clock + state.coarse.iter);
        if (used_resync) {
          adapt_f.log_lambda = log_lambda_f;
          adapt_c.log_lambda = log_lambda_c;
        }
        chol_f = chol_or_reset(adapt_f.sigma);
        chol_c = chol_or_reset(adapt_c.sigma);
      }
      if (cfg.method == CouplingMethod::Coarse && auto_tsub && (i + 1) % kTsubWindow == 0 && sub_trace.size() >= 10) {
        const double iact = autocorrelation_ess(sub_trace).iact;
        sub.t_sub = std::max(1, static_cast<int>(std::ceil(iact)));
      }
      if (i + 1 == fine.burn_in && diag != nullptr) diag->fine_burn_in = state.fine;
    } else {
      run.q_fine.push_back(q_f);
      run.q_coarse.push_back(q_c);
      run.theta_fine.push_back(state.fine.theta);
      run.theta_coarse.push_back(state.coarse.theta);
      run.accept_fine.push_back(step.accept_fine);
      run.accept_coarse.push_back(step.accept_coarse);
      resyncs += used_resync;
    }
  }

  run.resync_rate = static_cast<double>(resyncs) / static_cast<double>(n_post);
  run.t_sub = cfg.method == CouplingMethod::Coarse ? sub.t_sub : 0;
  run.cost = static_cast<double>(fine.n_samples) * (fine.cost_per_eval + coarse.cost_per_eval) +
             inner_evals * coarse.cost_per_eval;
  summarize_level(run);
  if (diag != nullptr) {
    if (fine.burn_in == 0) diag->fine_burn_in = ChainState::start(fine.target, start.theta_fine);
    diag->adapt_fine = adapt_f;
    diag->adapt_coarse = adapt_c;
  }
  return run;
}

MLMCResult run_ml_mcmc(const std::vector<LevelSpec>& levels, const CouplingConfig& cfg, std::uint64_t seed,
                       std::uint64_t stream) {
  if (levels.empty()) throw NumericalError("run_ml_mcmc: no levels");
  for (std::size_t l = 0; l < levels.size(); ++l)
    if (levels[l].level != static_cast<int>(l)) throw NumericalError("run_ml_mcmc: levels must be ordered 0..L");

  const auto d = levels.front().target.dim();
  const ParamVector theta0 = cfg.theta0 ? *cfg.theta0 : ParamVector::Zero(d);
  const RngStream root(seed, stream);

  MLMCResult result;
  ChainDiagnostics base_diag;
  RngStream rng0 = root.split(0);
  result.per_level.push_back(run_base_level(levels[0], cfg, theta0, rng0, &base_diag));

  ParamVector carry = base_diag.burn_in_state.theta;
  std::optional<AdaptState> carry_adapt;
  if (is_adaptive(cfg.method)) {
    carry_adapt = base_diag.final_adapt;
    if (cfg.adapt_level0) carry_adapt->clock += levels[0].burn_in;
  }

  for (std::size_t l = 1; l < levels.size(); ++l) {
    RngStream rng = root.split(l);
    CoupledDiagnostics diag;
    LevelStart start{carry, carry, carry_adapt};
    result.per_level.push_back(run_coupled_level(levels[l], levels[l - 1], cfg, start, rng, &diag));
    carry = diag.fine_burn_in.theta;
    if (carry_adapt) {
      carry_adapt = diag.adapt_fine;
      carry_adapt->clock += levels[l].burn_in;
    }
  }

  const Combined c = combine_estimate(result.per_level);
  result.estimate = c.estimate;
  result.estimator_variance = c.estimator_variance;
  for (const LevelRun& r : result.per_level) result.total_cost += r.cost;
  return result;
}

}  // namespace mlmcmc
