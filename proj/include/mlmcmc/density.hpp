#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "mlmcmc/errors.hpp"
#include "mlmcmc/rng.hpp"

namespace mlmcmc {

using ParamVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Lower Cholesky factor of a symmetric matrix with escalating diagonal
/// jitter. Jitter starts at zero, then runs 1e-12, 1e-11, ... up to 1e-6
/// times trace(M)/d. Throws NumericalError when even the largest jitter
/// fails.
Matrix cholesky_psd(const Matrix& m);

/// Multivariate normal with a cached Cholesky factor.
class GaussianSpec {
 public:
  GaussianSpec(ParamVector mean, Matrix covariance);

  static GaussianSpec standard(Eigen::Index dim);
  /// Reuse an existing lower factor; the covariance is rebuilt from it.
  static GaussianSpec from_chol(ParamVector mean, Matrix chol);

  const ParamVector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& chol() const { return chol_; }
  Eigen::Index dim() const { return mean_.size(); }
  /// log |chol| = sum of log diagonal entries.
  double log_det_chol() const { return log_det_chol_; }

 private:
  GaussianSpec() = default;

  ParamVector mean_;
  Matrix covariance_;
  Matrix chol_;
  double log_det_chol_ = 0.0;
};

/// Fully normalized log density in nats.
double log_gaussian_pdf(const ParamVector& x, const GaussianSpec& g);

ParamVector sample_gaussian(const GaussianSpec& g, RngStream& rng);

/// d i.i.d. standard normals.
ParamVector standard_normal(Eigen::Index dim, RngStream& rng);

struct Acceptance {
  double alpha = 0.0;
  /// Both current and proposed densities were zero.
  bool invalid = false;
};

/// Metropolis-Hastings acceptance probability computed in log space.
/// A proposal with log density -inf is never accepted; a current state with
/// log density -inf is always left when the proposal is finite.
Acceptance mh_accept_prob(double log_pi_cur, double log_pi_prop, double log_q_fwd, double log_q_rev);

/// Unnormalized log posterior at one level of a hierarchy.
///
/// eval must be pure and thread-safe. It may return -inf for zero density;
/// NaN is treated as a model error by the samplers.
class LogTarget {
 public:
  using Fn = std::function<double(const ParamVector&)>;

  LogTarget(Eigen::Index dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {
    if (dim_ < 1) throw NumericalError("LogTarget: dimension must be positive");
  }

  Eigen::Index dim() const { return dim_; }
  double operator()(const ParamVector& theta) const { return fn_(theta); }

 private:
  Eigen::Index dim_;
  Fn fn_;
};

/// Evaluate a target, throwing ModelError on NaN.
double eval_checked(const LogTarget& target, const ParamVector& theta);

}  // namespace mlmcmc
