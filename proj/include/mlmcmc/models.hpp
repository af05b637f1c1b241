#pragma once

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "mlmcmc/density.hpp"

namespace mlmcmc::models {

// ---------------------------------------------------------------------------
// Shifting Gaussian: pi_l = N(2^(2 - l), 1), d = 1.

double shifting_mean(int level);
/// -(theta - mu_l)^2 / 2, normalizing constant dropped.
double shifting_log_post(int level, const ParamVector& theta);
LogTarget shifting_target(int level);

// ---------------------------------------------------------------------------
// Rotating-shifting Gaussian: mean (2^(2-l), 3^(2-l)),
// covariance [[2, 2^-l], [2^-l, 1]], d = 2.

ParamVector rotating_mean(int level);
Matrix rotating_covariance(int level);
/// Full normalized Gaussian log density.
double rotating_log_post(int level, const ParamVector& theta);
LogTarget rotating_target(int level);

// ---------------------------------------------------------------------------
// Darcy flow: -div(kappa grad u) = 1 on [0,1]^2, u = 0 at x1 = 0 and x1 = 1,
// zero flux at x2 = 0 and x2 = 1.

/// kappa(x1) = exp(t1 cos(pi x1) + t2/2 sin(pi x1) + t3/3 cos(2 pi x1) + t4/4 sin(2 pi x1)).
double permeability(double x1, const ParamVector& theta);

inline constexpr int kDarcyDim = 4;
inline constexpr int kObsPerSide = 4;
inline constexpr double kDarcyNoiseVar = 0.01 * 0.01;

/// Nodal pressure on an (n+1) x (n+1) vertex grid with spacing h = 1/n.
struct PressureField {
  int n = 0;
  Eigen::MatrixXd u;  // u(i, j) at (x1, x2) = (i h, j h)
  int cg_iterations = 0;
  double relative_residual = 0.0;

  double h() const { return 1.0 / n; }
  /// Bilinear interpolation at (x1, x2) in [0,1]^2.
  double at(double x1, double x2) const;
};

/// Vertex-centred finite-volume discretization: 5-point stencil, harmonic
/// mean face permeabilities, half control volumes on the no-flux edges.
/// Matches P1 elements on the right-triangle mesh for constant kappa.
class DarcySolver {
 public:
  explicit DarcySolver(int n_cells, double tolerance = 1e-10);

  int n_cells() const { return n_; }
  Eigen::Index n_unknowns() const { return static_cast<Eigen::Index>(n_ - 1) * (n_ + 1); }

  /// System matrix for a nodal permeability function kappa(x1, x2).
  Eigen::SparseMatrix<double> assemble(const std::function<double(double, double)>& kappa) const;
  Eigen::VectorXd load() const;

  PressureField solve(const std::function<double(double, double)>& kappa) const;
  /// Permeability from theta. CG starts from the exact solution of the
  /// column-reduced problem, so it usually terminates immediately.
  PressureField solve(const ParamVector& theta) const;

  /// Net outflow through the two Dirichlet edges.
  double boundary_outflow(const PressureField& u, const std::function<double(double, double)>& kappa) const;

 private:
  Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(j) * (n_ - 1) + (i - 1); }
  Eigen::MatrixXd nodal(const std::function<double(double, double)>& kappa) const;
  Eigen::SparseMatrix<double> assemble_nodal(const Eigen::MatrixXd& k) const;
  PressureField solve_nodal(const Eigen::MatrixXd& k, const Eigen::VectorXd* guess) const;
  Eigen::VectorXd column_solution(const Eigen::VectorXd& k1) const;

  int n_;
  double tol_;
};

/// Midpoint rule over cells applied to the bilinear field: the domain
/// average pressure.
double darcy_qoi(const PressureField& u);

/// Observation points (i/5, j/5), i, j = 1..4, ordered with x1 fastest.
std::vector<std::array<double, 2>> observation_points();
Eigen::VectorXd observe(const PressureField& u);

inline int darcy_cells(int level) { return 8 << level; }

/// Darcy inverse problem at one mesh level.
class DarcyModel {
 public:
  DarcyModel(int level, Eigen::VectorXd data, double noise_var = kDarcyNoiseVar);

  int level() const { return level_; }
  const DarcySolver& solver() const { return solver_; }
  const Eigen::VectorXd& data() const { return data_; }
  double noise_var() const { return noise_var_; }

  PressureField solve(const ParamVector& theta) const { return solver_.solve(theta); }
  /// Standard-normal prior plus Gaussian likelihood of the 16 observations.
  double log_posterior(const ParamVector& theta) const;
  double log_likelihood(const PressureField& u) const;

 private:
  int level_;
  DarcySolver solver_;
  Eigen::VectorXd data_;
  double noise_var_;
};

/// Log posterior and QoI sharing one forward solve through a single-entry
/// cache. Not thread-safe; build one per chain run.
class DarcyLevelEvaluator {
 public:
  explicit DarcyLevelEvaluator(std::shared_ptr<const DarcyModel> model) : model_(std::move(model)) {}

  double log_posterior(const ParamVector& theta);
  double qoi(const ParamVector& theta);
  std::uint64_t solves() const { return solves_; }

 private:
  void ensure(const ParamVector& theta);

  std::shared_ptr<const DarcyModel> model_;
  ParamVector last_theta_;
  double last_log_post_ = 0.0;
  double last_qoi_ = 0.0;
  bool valid_ = false;
  std::uint64_t solves_ = 0;
};

/// Noiseless observations at the finest level plus N(0, noise_var) noise.
Eigen::VectorXd generate_synthetic_data(int level_fine, const ParamVector& theta_true, std::uint64_t noise_seed,
                                        double noise_var = kDarcyNoiseVar);

/// Whitespace separated decimals, 17 significant digits.
void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::filesystem::path& path);

}  // namespace mlmcmc::models
