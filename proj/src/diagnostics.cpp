#include "mlmcmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mlmcmc/errors.hpp"

namespace mlmcmc {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw NumericalError("sample_covariance: length mismatch");
  if (a.size() < 2) return 0.0;
  const double ma = mean(a), mb = mean(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

double sample_variance(std::span<const double> x) { return sample_covariance(x, x); }

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw NumericalError("pearson: length mismatch");
  if (a.size() < 2) throw NumericalError("pearson: need at least two points");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

AutocorrelationResult autocorrelation_ess(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw NumericalError("autocorrelation_ess: need at least 10 points");
  AutocorrelationResult r;
  const double m = mean(x);
  std::vector<double> c(x.size());
  std::transform(x.begin(), x.end(), c.begin(), [m](double v) { return v - m; });
  const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
  const std::size_t max_lag = std::min<std::size_t>(n / 5, 1000);
  if (c0 <= 0.0) {
    r.constant = true;
    r.acf.assign(max_lag + 1, 0.0);
    r.acf[0] = 1.0;
    r.ess = static_cast<double>(n);
    return r;
  }
  r.acf.resize(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k)
    r.acf[k] = std::inner_product(c.begin(), c.end() - static_cast<std::ptrdiff_t>(k),
                                  c.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / c0;
  r.acf[0] = 1.0;

  // Geyer: sum pairs (rho_2k + rho_2k+1) while they stay positive.
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 <= max_lag; ++k) {
    const double pair = r.acf[2 * k] + r.acf[2 * k + 1];
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  r.iact = std::max(tau, 1.0 / static_cast<double>(n));
  r.ess = static_cast<double>(n) / r.iact;
  return r;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.27) return 1.0;
  if (lambda < 1.0) {
    // Jacobi-theta form converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double t = -pi2 / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 9; k += 2) s += std::exp(t * k * k);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> x, const std::function<double(double)>& cdf, double n_effective) {
  if (x.empty()) throw NumericalError("ks_test: empty sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult r;
  r.statistic = d;
  r.n_effective = n_effective;
  const double sn = std::sqrt(n_effective);
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

double normal_cdf(double x, double mu, double sd) {
  return 0.5 * std::erfc(-(x - mu) / (sd * std::numbers::sqrt2));
}

}  // namespace mlmcmc
