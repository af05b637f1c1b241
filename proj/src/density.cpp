#include "mlmcmc/density.hpp"

#include <cmath>
#include <numbers>

namespace mlmcmc {

Matrix cholesky_psd(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw NumericalError("cholesky_psd: matrix must be square and non-empty");
  if (!m.allFinite()) throw NumericalError("cholesky_psd: non-finite entries");
  if ((m - m.transpose()).norm() > 1e-10 * (1.0 + m.norm())) throw NumericalError("cholesky_psd: matrix is not symmetric");
  const auto d = m.rows();
  const double scale = std::max(m.trace() / static_cast<double>(d), 0.0);
  // A zero matrix still gets a tiny absolute jitter so degenerate proposals collapse onto the mean.
  const double base = scale > 0.0 ? scale : 1.0;

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  for (double rel = 1e-12; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
    llt.compute(m + rel * base * Matrix::Identity(d, d));
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw NumericalError("cholesky_psd: matrix is not positive semi-definite within jitter 1e-6*trace/d");
}

GaussianSpec::GaussianSpec(ParamVector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw NumericalError("GaussianSpec: covariance shape does not match mean");
  chol_ = cholesky_psd(covariance_);
  log_det_chol_ = chol_.diagonal().array().log().sum();
}

GaussianSpec GaussianSpec::standard(Eigen::Index dim) {
  return GaussianSpec(ParamVector::Zero(dim), Matrix::Identity(dim, dim));
}

GaussianSpec GaussianSpec::from_chol(ParamVector mean, Matrix chol) {
  if (chol.rows() != mean.size() || chol.cols() != mean.size())
    throw NumericalError("GaussianSpec: factor shape does not match mean");
  GaussianSpec g;
  g.mean_ = std::move(mean);
  g.covariance_ = chol * chol.transpose();
  g.chol_ = std::move(chol);
  g.log_det_chol_ = g.chol_.diagonal().array().log().sum();
  return g;
}

double log_gaussian_pdf(const ParamVector& x, const GaussianSpec& g) {
  if (x.size() != g.dim()) throw NumericalError("log_gaussian_pdf: dimension mismatch");
  const ParamVector z = g.chol().triangularView<Eigen::Lower>().solve(x - g.mean());
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi) - g.log_det_chol() - 0.5 * z.squaredNorm();
}

ParamVector standard_normal(Eigen::Index dim, RngStream& rng) {
  ParamVector z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
  return z;
}

ParamVector sample_gaussian(const GaussianSpec& g, RngStream& rng) {
  return g.mean() + g.chol() * standard_normal(g.dim(), rng);
}

Acceptance mh_accept_prob(double log_pi_cur, double log_pi_prop, double log_q_fwd, double log_q_rev) {
  if (log_pi_prop == kNegInf) return {0.0, log_pi_cur == kNegInf};
  if (log_pi_cur == kNegInf) return {1.0, false};
  const double log_ratio = log_pi_prop + log_q_rev - log_pi_cur - log_q_fwd;
  if (std::isnan(log_ratio)) return {0.0, true};
  return {log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio), false};
}

double eval_checked(const LogTarget& target, const ParamVector& theta) {
  const double v = target(theta);
  if (std::isnan(v)) throw ModelError("log target returned NaN");
  return v;
}

}  // namespace mlmcmc
