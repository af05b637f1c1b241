#include "mlmcmc/models.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

namespace mlmcmc::models {

namespace {

constexpr double kPi = std::numbers::pi;

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

void require_dim(const ParamVector& theta, Eigen::Index d, const char* who) {
  if (theta.size() != d) throw NumericalError(std::string(who) + ": expected dimension " + std::to_string(d));
}

}  // namespace

double shifting_mean(int level) { return std::ldexp(1.0, 2 - level); }

double shifting_log_post(int level, const ParamVector& theta) {
  require_dim(theta, 1, "shifting_log_post");
  const double r = theta[0] - shifting_mean(level);
  return -0.5 * r * r;
}

LogTarget shifting_target(int level) {
  return LogTarget(1, [level](const ParamVector& t) { return shifting_log_post(level, t); });
}

ParamVector rotating_mean(int level) {
  ParamVector m(2);
  m << std::ldexp(1.0, 2 - level), std::pow(3.0, 2 - level);
  return m;
}

Matrix rotating_covariance(int level) {
  const double off = std::ldexp(1.0, -level);
  Matrix c(2, 2);
  c << 2.0, off, off, 1.0;
  return c;
}

double rotating_log_post(int level, const ParamVector& theta) {
  require_dim(theta, 2, "rotating_log_post");
  // Closed-form 2x2 inverse keeps this cheap inside long chains.
  const Matrix c = rotating_covariance(level);
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  const double dx = theta[0] - std::ldexp(1.0, 2 - level);
  const double dy = theta[1] - std::pow(3.0, 2 - level);
  const double quad = (c(1, 1) * dx * dx - 2.0 * c(0, 1) * dx * dy + c(0, 0) * dy * dy) / det;
  return -std::log(2.0 * kPi) - 0.5 * std::log(det) - 0.5 * quad;
}

LogTarget rotating_target(int level) {
  return LogTarget(2, [level](const ParamVector& t) { return rotating_log_post(level, t); });
}

double permeability(double x1, const ParamVector& theta) {
  require_dim(theta, kDarcyDim, "permeability");
  return std::exp(theta[0] * std::cos(kPi * x1) + theta[1] / 2.0 * std::sin(kPi * x1) +
                  theta[2] / 3.0 * std::cos(2.0 * kPi * x1) + theta[3] / 4.0 * std::sin(2.0 * kPi * x1));
}

double PressureField::at(double x1, double x2) const {
  const double hh = h();
  const double s = std::clamp(x1, 0.0, 1.0) / hh;
  const double t = std::clamp(x2, 0.0, 1.0) / hh;
  const int i = std::min(static_cast<int>(s), n - 1);
  const int j = std::min(static_cast<int>(t), n - 1);
  const double a = s - i, b = t - j;
  return (1 - a) * (1 - b) * u(i, j) + a * (1 - b) * u(i + 1, j) + (1 - a) * b * u(i, j + 1) +
         a * b * u(i + 1, j + 1);
}

DarcySolver::DarcySolver(int n_cells, double tolerance) : n_(n_cells), tol_(tolerance) {
  if (n_ < 2) throw NumericalError("DarcySolver: need at least two cells per side");
}

Eigen::MatrixXd DarcySolver::nodal(const std::function<double(double, double)>& kappa) const {
  const double h = 1.0 / n_;
  Eigen::MatrixXd k(n_ + 1, n_ + 1);
  for (int i = 0; i <= n_; ++i)
    for (int j = 0; j <= n_; ++j) k(i, j) = kappa(i * h, j * h);
  return k;
}

Eigen::SparseMatrix<double> DarcySolver::assemble(const std::function<double(double, double)>& kappa) const {
  return assemble_nodal(nodal(kappa));
}

Eigen::SparseMatrix<double> DarcySolver::assemble_nodal(const Eigen::MatrixXd& k) const {
  const double h = 1.0 / n_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n_unknowns()) * 5);
  for (int j = 0; j <= n_; ++j) {
    // Face length in x2 for x1-normal faces: halved on the no-flux edges.
    const double hy = (j == 0 || j == n_) ? 0.5 * h : h;
    for (int i = 1; i < n_; ++i) {
      const Eigen::Index p = index(i, j);
      double diag = 0.0;
      for (int di : {-1, 1}) {
        const double t = harmonic(k(i, j), k(i + di, j)) * hy / h;
        diag += t;
        if (i + di >= 1 && i + di <= n_ - 1) trips.emplace_back(p, index(i + di, j), -t);
      }
      for (int dj : {-1, 1}) {
        if (j + dj < 0 || j + dj > n_) continue;
        const double t = harmonic(k(i, j), k(i, j + dj));  // face length h over distance h
        diag += t;
        trips.emplace_back(p, index(i, j + dj), -t);
      }
      trips.emplace_back(p, p, diag);
    }
  }
  Eigen::SparseMatrix<double> a(n_unknowns(), n_unknowns());
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

Eigen::VectorXd DarcySolver::load() const {
  const double h = 1.0 / n_;
  Eigen::VectorXd b(n_unknowns());
  for (int j = 0; j <= n_; ++j) {
    const double hy = (j == 0 || j == n_) ? 0.5 * h : h;
    for (int i = 1; i < n_; ++i) b[index(i, j)] = h * hy;
  }
  return b;
}

PressureField DarcySolver::solve_nodal(const Eigen::MatrixXd& k, const Eigen::VectorXd* guess) const {
  const Eigen::SparseMatrix<double> a = assemble_nodal(k);
  const Eigen::VectorXd b = load();
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol_);
  cg.setMaxIterations(static_cast<Eigen::Index>(10 * n_unknowns()));
  cg.compute(a);
  const Eigen::VectorXd x = guess != nullptr ? Eigen::VectorXd(cg.solveWithGuess(b, *guess)) : Eigen::VectorXd(cg.solve(b));
  if (cg.info() != Eigen::Success || !x.allFinite())
    throw ModelError("Darcy CG failed to converge after " + std::to_string(cg.iterations()) +
                     " iterations (residual " + std::to_string(cg.error()) + ")");

  PressureField f;
  f.n = n_;
  f.u = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
  for (int j = 0; j <= n_; ++j)
    for (int i = 1; i < n_; ++i) f.u(i, j) = x[index(i, j)];
  f.cg_iterations = static_cast<int>(cg.iterations());
  f.relative_residual = cg.error();
  return f;
}

PressureField DarcySolver::solve(const std::function<double(double, double)>& kappa) const {
  return solve_nodal(nodal(kappa), nullptr);
}

Eigen::VectorXd DarcySolver::column_solution(const Eigen::VectorXd& k1) const {
  // Tridiagonal system for i = 1..n-1 (Thomas algorithm); with kappa
  // independent of x2 every grid column carries this profile.
  const double h = 1.0 / n_;
  const int m = n_ - 1;
  std::vector<double> lower(m), diag(m), upper(m), rhs(m, h * h);
  for (int r = 0; r < m; ++r) {
    const int i = r + 1;
    const double tl = harmonic(k1[i], k1[i - 1]);
    const double tr = harmonic(k1[i], k1[i + 1]);
    lower[r] = -tl;
    upper[r] = -tr;
    diag[r] = tl + tr;
  }
  for (int r = 1; r < m; ++r) {
    const double w = lower[r] / diag[r - 1];
    diag[r] -= w * upper[r - 1];
    rhs[r] -= w * rhs[r - 1];
  }
  Eigen::VectorXd col(m);
  col[m - 1] = rhs[m - 1] / diag[m - 1];
  for (int r = m - 2; r >= 0; --r) col[r] = (rhs[r] - upper[r] * col[r + 1]) / diag[r];

  Eigen::VectorXd x(n_unknowns());
  for (int j = 0; j <= n_; ++j) x.segment(index(1, j), m) = col;
  return x;
}

PressureField DarcySolver::solve(const ParamVector& theta) const {
  require_dim(theta, kDarcyDim, "DarcySolver::solve");
  if (!theta.allFinite()) throw ModelError("Darcy solve: non-finite parameters");
  const double h = 1.0 / n_;
  Eigen::VectorXd k1(n_ + 1);
  for (int i = 0; i <= n_; ++i) k1[i] = permeability(i * h, theta);
  const Eigen::MatrixXd k = k1.replicate(1, n_ + 1);
  const Eigen::VectorXd guess = column_solution(k1);
  return solve_nodal(k, &guess);
}

double DarcySolver::boundary_outflow(const PressureField& f, const std::function<double(double, double)>& kappa) const {
  const double h = 1.0 / n_;
  double out = 0.0;
  for (int j = 0; j <= n_; ++j) {
    const double hy = (j == 0 || j == n_) ? 0.5 * h : h;
    const double y = j * h;
    const double tl = harmonic(kappa(0.0, y), kappa(h, y)) * hy / h;
    const double tr = harmonic(kappa(1.0, y), kappa(1.0 - h, y)) * hy / h;
    // Flux across the first interior face plus the source inside the
    // boundary half-cell.
    out += tl * f.u(1, j) + tr * f.u(n_ - 1, j) + 2.0 * 0.5 * h * hy;
  }
  return out;
}

double darcy_qoi(const PressureField& f) {
  const double h = f.h();
  double s = 0.0;
  for (int i = 0; i < f.n; ++i)
    for (int j = 0; j < f.n; ++j) s += 0.25 * (f.u(i, j) + f.u(i + 1, j) + f.u(i, j + 1) + f.u(i + 1, j + 1));
  return s * h * h;
}

std::vector<std::array<double, 2>> observation_points() {
  std::vector<std::array<double, 2>> pts;
  for (int j = 1; j <= kObsPerSide; ++j)
    for (int i = 1; i <= kObsPerSide; ++i) pts.push_back({i / 5.0, j / 5.0});
  return pts;
}

Eigen::VectorXd observe(const PressureField& f) {
  const auto pts = observation_points();
  Eigen::VectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) v[static_cast<Eigen::Index>(k)] = f.at(pts[k][0], pts[k][1]);
  return v;
}

DarcyModel::DarcyModel(int level, Eigen::VectorXd data, double noise_var)
    : level_(level), solver_(darcy_cells(level)), data_(std::move(data)), noise_var_(noise_var) {
  if (data_.size() != kObsPerSide * kObsPerSide) throw NumericalError("DarcyModel: expected 16 observations");
  if (!(noise_var_ > 0.0)) throw NumericalError("DarcyModel: noise variance must be positive");
}

double DarcyModel::log_likelihood(const PressureField& u) const {
  return -0.5 / noise_var_ * (data_ - observe(u)).squaredNorm();
}

double DarcyModel::log_posterior(const ParamVector& theta) const {
  return -0.5 * theta.squaredNorm() + log_likelihood(solve(theta));
}

void DarcyLevelEvaluator::ensure(const ParamVector& theta) {
  if (valid_ && last_theta_.size() == theta.size() && last_theta_ == theta) return;
  const PressureField f = model_->solve(theta);
  last_theta_ = theta;
  last_log_post_ = -0.5 * theta.squaredNorm() + model_->log_likelihood(f);
  last_qoi_ = darcy_qoi(f);
  valid_ = true;
  ++solves_;
}

double DarcyLevelEvaluator::log_posterior(const ParamVector& theta) {
  ensure(theta);
  return last_log_post_;
}

double DarcyLevelEvaluator::qoi(const ParamVector& theta) {
  ensure(theta);
  return last_qoi_;
}

Eigen::VectorXd generate_synthetic_data(int level_fine, const ParamVector& theta_true, std::uint64_t noise_seed,
                                        double noise_var) {
  const DarcySolver solver(darcy_cells(level_fine));
  Eigen::VectorXd obs = observe(solver.solve(theta_true));
  RngStream rng(noise_seed, 0);
  const double sd = std::sqrt(noise_var);
  for (Eigen::Index k = 0; k < obs.size(); ++k) obs[k] += sd * rng.normal();
  return obs;
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << std::setprecision(17);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << v[k] << '\n';
}

Eigen::VectorXd read_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NumericalError("cannot read " + path.string());
  std::vector<double> vals;
  double x;
  while (in >> x) vals.push_back(x);
  if (!in.eof()) throw NumericalError("malformed numeric file " + path.string());
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace mlmcmc::models
