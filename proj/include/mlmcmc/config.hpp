#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlmcmc/mlmc.hpp"

namespace mlmcmc {

enum class ModelKind { Shifting, Rotating, Darcy };

std::string_view to_string(ModelKind m);

/// Proposal mean/covariance given in a config. A mean of "analytic_midpoint"
/// averages the model's analytic level means (Gaussian families only);
/// "adaptive" (resync only) takes the averaged adaptation state.
struct ProposalSpec {
  enum class MeanSource { Fixed, AnalyticMidpoint, Adaptive };
  MeanSource mean_source = MeanSource::Adaptive;
  std::vector<double> mean;
  /// Empty = adaptive (resync only); one entry = scalar times identity;
  /// d*d entries = row-major matrix.
  std::vector<double> cov;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::Shifting;
  int max_level = 0;
  std::vector<std::uint64_t> n_samples;
  std::vector<std::uint64_t> burn_in;
  CouplingMethod coupling = CouplingMethod::Synce;
  /// Per-level random-walk covariance (scalar*I or row-major matrix).
  std::vector<std::vector<double>> proposal_cov;
  std::optional<ProposalSpec> independent;
  std::vector<double> omega;  // omega_1..omega_L
  ProposalSpec resync;
  int t_sub = 0;
  std::vector<double> target_alpha;  // per level 0..L
  double gamma_exponent = 0.7;
  bool adapt_level0 = true;
  std::vector<double> theta0;
  std::vector<double> cost;  // per level
  std::uint64_t max_stuck = 1000;
  std::uint64_t seed = 0;
  int n_replicates = 1;
  std::filesystem::path output_dir = "out";
  // Darcy fixtures, resolved relative to the config file.
  std::filesystem::path theta_true_file;
  std::filesystem::path data_file;

  int dim() const;
  /// Canonical JSON with every default resolved.
  nlohmann::json to_json() const;
};

/// Parse and validate. Unknown keys are rejected; all missing required keys
/// are reported together. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Build the coupling configuration for run_ml_mcmc.
CouplingConfig make_coupling_config(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON dump.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace mlmcmc
