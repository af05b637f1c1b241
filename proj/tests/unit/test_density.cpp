#include "doctest.h"
#include "mlmcmc/density.hpp"
#include "mlmcmc/errors.hpp"
#include "mlmcmc/rng.hpp"

#include <cmath>

using namespace mlmcmc;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

ParamVector vec(std::initializer_list<double> v) {
  ParamVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

}  // namespace

TEST_SUITE("density") {

TEST_CASE("cholesky of the identity") {
  CHECK((cholesky_psd(Matrix::Identity(2, 2)) - Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("cholesky of a diagonal matrix takes square roots") {
  const Matrix l = cholesky_psd(mat2(4, 0, 0, 9));
  CHECK((l - mat2(2, 0, 0, 3)).norm() < 1e-15);
}

TEST_CASE("cholesky reconstructs the level-1 rotating covariance") {
  const Matrix m = mat2(2, 0.5, 0.5, 1);
  const Matrix l = cholesky_psd(m);
  CHECK(l(0, 1) == 0.0);
  CHECK((l * l.transpose() - m).norm() < 1e-10);
}

TEST_CASE("cholesky jitters a singular matrix and rejects an indefinite one") {
  const Matrix rank1 = mat2(1, 1, 1, 1);
  const Matrix l = cholesky_psd(rank1);
  CHECK((l * l.transpose() - rank1).norm() <= 1e-6 * (1.0 + rank1.norm()));

  const Matrix zero = Matrix::Zero(3, 3);
  CHECK(cholesky_psd(zero).norm() < 1e-5);

  CHECK_THROWS_AS(cholesky_psd(mat2(1, 0, 0, -1)), NumericalError);
  CHECK_THROWS_AS(cholesky_psd(mat2(1, 2, 0, 1)), NumericalError);
}

TEST_CASE("cholesky reconstruction holds for random PSD matrices") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 5;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
    // Some trials are rank deficient on purpose.
    const Matrix b = trial % 3 == 0 ? Matrix(a.leftCols(std::max(1, d - 1))) : a;
    const Matrix m = b * b.transpose();
    const Matrix l = cholesky_psd(m);
    CHECK((l * l.transpose() - m).norm() <= 1e-6 * (1.0 + m.norm()));
  }
}

TEST_CASE("log pdf closed-form values") {
  const GaussianSpec g = GaussianSpec::standard(1);
  CHECK(log_gaussian_pdf(vec({0.0}), g) == doctest::Approx(-0.9189385).epsilon(1e-7));
  CHECK(log_gaussian_pdf(vec({2.0}), g) == doctest::Approx(-2.9189385).epsilon(1e-7));
  CHECK_THROWS_AS(log_gaussian_pdf(vec({0.0, 1.0}), g), NumericalError);
}

TEST_CASE("log pdf peaks at the mean") {
  const GaussianSpec g(vec({1.0, -2.0}), mat2(2, 0.3, 0.3, 0.5));
  const double h = 1e-5;
  for (int k = 0; k < 2; ++k) {
    ParamVector up = g.mean(), dn = g.mean();
    up[k] += h;
    dn[k] -= h;
    const double grad = (log_gaussian_pdf(up, g) - log_gaussian_pdf(dn, g)) / (2 * h);
    CHECK(std::abs(grad) < 1e-6);
    CHECK(log_gaussian_pdf(up, g) < log_gaussian_pdf(g.mean(), g));
  }
}

TEST_CASE("log pdf integrates to one on a uniform grid") {
  const double sigma = 1.7;
  const GaussianSpec g(vec({0.4}), Matrix::Constant(1, 1, sigma * sigma));
  const int n = 20000;
  const double lo = 0.4 - 6 * sigma, hi = 0.4 + 6 * sigma, h = (hi - lo) / n;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += std::exp(log_gaussian_pdf(vec({lo + (k + 0.5) * h}), g)) * h;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sampling with a zero covariance returns the mean") {
  const GaussianSpec g(vec({3.0, -1.0}), Matrix::Zero(2, 2));
  RngStream rng(1, 1);
  for (int i = 0; i < 10; ++i) CHECK((sample_gaussian(g, rng) - g.mean()).norm() < 1e-5);
}

TEST_CASE("sample moments of the standard bivariate normal") {
  const GaussianSpec g = GaussianSpec::standard(2);
  RngStream rng(2024, 0);
  const int n = 100000;
  ParamVector s = ParamVector::Zero(2);
  Matrix ss = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const ParamVector x = sample_gaussian(g, rng);
    s += x;
    ss += x * x.transpose();
  }
  const ParamVector m = s / n;
  const Matrix c = (ss - n * m * m.transpose()) / (n - 1);
  CHECK(m.cwiseAbs().maxCoeff() < 0.02);
  CHECK((c - Matrix::Identity(2, 2)).norm() < 0.03);
}

TEST_CASE("sampling is reproducible per stream") {
  const GaussianSpec g(vec({0.0, 1.0}), mat2(1, 0.2, 0.2, 2));
  RngStream a(77, 4), b(77, 4);
  for (int i = 0; i < 100; ++i) CHECK(sample_gaussian(g, a) == sample_gaussian(g, b));
}

TEST_CASE("from_chol rebuilds the covariance") {
  const Matrix m = mat2(2, 0.5, 0.5, 1);
  const GaussianSpec a(vec({0, 0}), m);
  const GaussianSpec b = GaussianSpec::from_chol(vec({0, 0}), a.chol());
  CHECK((b.covariance() - m).norm() < 1e-12);
  CHECK(b.log_det_chol() == doctest::Approx(0.5 * std::log(1.75)));
}

TEST_CASE("acceptance probability cases") {
  CHECK(mh_accept_prob(-1.0, -1.0, 0.0, 0.0).alpha == 1.0);
  CHECK(mh_accept_prob(0.0, -1.0, 0.0, 0.0).alpha == doctest::Approx(std::exp(-1.0)));
  CHECK(mh_accept_prob(0.0, -1.0, 0.0, 0.0).alpha == doctest::Approx(0.3679).epsilon(1e-4));
  CHECK(mh_accept_prob(0.0, kNegInf, 0.0, 0.0).alpha == 0.0);
  CHECK(mh_accept_prob(kNegInf, -5.0, 0.0, 0.0).alpha == 1.0);
  const Acceptance both = mh_accept_prob(kNegInf, kNegInf, 0.0, 0.0);
  CHECK(both.alpha == 0.0);
  CHECK(both.invalid);
  // Asymmetric proposal: ratio includes q_rev / q_fwd.
  CHECK(mh_accept_prob(0.0, 0.0, 0.0, -2.0).alpha == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("acceptance probability ignores a common additive constant") {
  RngStream rng(5, 5);
  for (int i = 0; i < 500; ++i) {
    const double cur = 3 * rng.normal(), prop = 3 * rng.normal();
    const double qf = rng.normal(), qr = rng.normal(), c = 100 * rng.normal();
    CHECK(mh_accept_prob(cur + c, prop + c, qf, qr).alpha ==
          doctest::Approx(mh_accept_prob(cur, prop, qf, qr).alpha).epsilon(1e-10));
  }
}

TEST_CASE("eval_checked rejects NaN and passes -inf") {
  const LogTarget nan_target(1, [](const ParamVector&) { return std::nan(""); });
  const LogTarget zero_target(1, [](const ParamVector&) { return kNegInf; });
  CHECK_THROWS_AS(eval_checked(nan_target, vec({0.0})), ModelError);
  CHECK(eval_checked(zero_target, vec({0.0})) == kNegInf);
  CHECK_THROWS_AS(LogTarget(0, [](const ParamVector&) { return 0.0; }), NumericalError);
}

}  // TEST_SUITE
