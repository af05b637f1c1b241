#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mlmcmc {

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);
/// Unbiased sample covariance; spans must have equal length.
double sample_covariance(std::span<const double> a, std::span<const double> b);

/// Sample Pearson correlation; nullopt when either series has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct AutocorrelationResult {
  std::vector<double> acf;  // acf[0] == 1
  double ess = 0.0;
  double iact = 1.0;
  bool constant = false;
};

/// Autocorrelation by direct lag sums up to lag min(N/5, 1000) and effective
/// sample size N / (1 + 2 sum acf_k), truncated by Geyer's initial positive
/// sequence rule. A constant series is flagged and reports ESS = N.
AutocorrelationResult autocorrelation_ess(std::span<const double> x);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double n_effective = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov survival function P(K > lambda).
double kolmogorov_survival(double lambda);

/// One-sample KS test against a continuous CDF. The p-value uses
/// n_effective (pass the ESS for correlated samples).
KsResult ks_test(std::span<const double> x, const std::function<double(double)>& cdf, double n_effective);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

}  // namespace mlmcmc
