#include "mlmcmc/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mlmcmc/models.hpp"

namespace mlmcmc {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys{
    "model",       "L",          "n_samples",    "burn_in",        "coupling",     "proposal_cov",
    "independent", "omega",      "resync",       "t_sub",          "target_alpha", "gamma_exponent",
    "adapt_level0", "theta0",    "cost",         "max_stuck",      "seed",         "n_replicates",
    "output_dir",  "data",       "description"};
const std::vector<std::string> kRequired{"model", "L", "n_samples", "burn_in", "coupling", "seed"};

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

// Accept a scalar (broadcast to every level) or a list of exactly `count`.
template <typename T>
std::vector<T> per_level(const json& j, const std::string& field, std::size_t count) {
  if (j.is_array()) {
    if (j.size() != count)
      fail("field '" + field + "' must have " + std::to_string(count) + " entries, got " + std::to_string(j.size()));
    return j.get<std::vector<T>>();
  }
  if (j.is_number()) return std::vector<T>(count, j.get<T>());
  fail("field '" + field + "' must be a number or a list");
}

std::vector<double> matrix_entries(const json& j, const std::string& field, int d) {
  std::vector<double> v;
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail("field '" + field + "' must be a number or a matrix");
  for (const auto& row : j) {
    if (row.is_array()) {
      for (const auto& x : row) v.push_back(x.get<double>());
    } else {
      v.push_back(row.get<double>());
    }
  }
  if (v.size() != static_cast<std::size_t>(d * d) && v.size() != 1)
    fail("field '" + field + "' must be a scalar or a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
  return v;
}

ProposalSpec parse_proposal(const json& j, const std::string& field, int d, bool allow_adaptive) {
  if (!j.is_object()) fail("field '" + field + "' must be an object with 'mean' and 'cov'");
  for (const auto& [k, _] : j.items())
    if (k != "mean" && k != "cov") fail("unknown key '" + field + "." + k + "'");
  ProposalSpec p;
  const json mean = j.value("mean", json("adaptive"));
  if (mean.is_string()) {
    const auto s = mean.get<std::string>();
    if (s == "analytic_midpoint")
      p.mean_source = ProposalSpec::MeanSource::AnalyticMidpoint;
    else if (s == "adaptive" && allow_adaptive)
      p.mean_source = ProposalSpec::MeanSource::Adaptive;
    else
      fail("field '" + field + ".mean' has unsupported value '" + s + "'");
  } else {
    p.mean_source = ProposalSpec::MeanSource::Fixed;
    p.mean = mean.is_array() ? mean.get<std::vector<double>>() : std::vector<double>{mean.get<double>()};
    if (p.mean.size() != static_cast<std::size_t>(d)) fail("field '" + field + ".mean' must have dimension " + std::to_string(d));
  }
  if (j.contains("cov")) {
    const json& c = j.at("cov");
    if (c.is_string() && c.get<std::string>() == "adaptive" && allow_adaptive) {
      p.cov.clear();
    } else {
      p.cov = matrix_entries(c, field + ".cov", d);
    }
  } else if (!allow_adaptive) {
    fail("field '" + field + ".cov' is required");
  }
  return p;
}

Matrix to_matrix(const std::vector<double>& v, int d) {
  if (v.size() == 1) return v[0] * Matrix::Identity(d, d);
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = v[static_cast<std::size_t>(r * d + c)];
  return m;
}

json matrix_json(const std::vector<double>& v, int d) {
  if (v.size() == 1) return v[0];
  json rows = json::array();
  for (int r = 0; r < d; ++r) {
    json row = json::array();
    for (int c = 0; c < d; ++c) row.push_back(v[static_cast<std::size_t>(r * d + c)]);
    rows.push_back(row);
  }
  return rows;
}

json proposal_json(const ProposalSpec& p, int d) {
  json j;
  switch (p.mean_source) {
    case ProposalSpec::MeanSource::Fixed: j["mean"] = p.mean; break;
    case ProposalSpec::MeanSource::AnalyticMidpoint: j["mean"] = "analytic_midpoint"; break;
    case ProposalSpec::MeanSource::Adaptive: j["mean"] = "adaptive"; break;
  }
  j["cov"] = p.cov.empty() ? json("adaptive") : matrix_json(p.cov, d);
  return j;
}

ParamVector analytic_mean(ModelKind m, int level) {
  switch (m) {
    case ModelKind::Shifting: return ParamVector::Constant(1, models::shifting_mean(level));
    case ModelKind::Rotating: return models::rotating_mean(level);
    case ModelKind::Darcy: break;
  }
  throw ConfigError("analytic_midpoint is only available for the Gaussian models");
}

}  // namespace

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::Shifting: return "shifting";
    case ModelKind::Rotating: return "rotating";
    case ModelKind::Darcy: return "darcy";
  }
  return "unknown";
}

int ExperimentConfig::dim() const {
  switch (model) {
    case ModelKind::Shifting: return 1;
    case ModelKind::Rotating: return 2;
    case ModelKind::Darcy: return models::kDarcyDim;
  }
  return 0;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail("config must be a JSON object");
  std::vector<std::string> errors;
  for (const auto& [k, _] : j.items())
    if (!kKnownKeys.contains(k)) errors.push_back("unknown key '" + k + "'");
  std::vector<std::string> missing;
  for (const auto& k : kRequired)
    if (!j.contains(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string s = "missing required keys:";
    for (const auto& k : missing) s += " " + k;
    errors.push_back(s);
  }
  if (!errors.empty()) {
    std::string s;
    for (const auto& e : errors) s += (s.empty() ? "" : "; ") + e;
    fail(s);
  }

  ExperimentConfig c;
  try {
    const auto model = j.at("model").get<std::string>();
    if (model == "shifting") c.model = ModelKind::Shifting;
    else if (model == "rotating") c.model = ModelKind::Rotating;
    else if (model == "darcy") c.model = ModelKind::Darcy;
    else fail("field 'model' must be one of shifting, rotating, darcy");

    c.max_level = j.at("L").get<int>();
    if (c.max_level < 0) fail("field 'L' must be non-negative");
    const auto n_levels = static_cast<std::size_t>(c.max_level + 1);
    const int d = c.dim();

    c.n_samples = per_level<std::uint64_t>(j.at("n_samples"), "n_samples", n_levels);
    c.burn_in = per_level<std::uint64_t>(j.at("burn_in"), "burn_in", n_levels);
    for (std::size_t l = 0; l < n_levels; ++l)
      if (c.n_samples[l] <= c.burn_in[l]) fail("field 'n_samples' must exceed 'burn_in' at level " + std::to_string(l));

    const auto coupling = coupling_from_string(j.at("coupling").get<std::string>());
    if (!coupling) fail("field 'coupling' must be one of coarse, independent, maximal, synce, synce_a, synce_ar");
    c.coupling = *coupling;

    if (j.contains("proposal_cov")) {
      const json& pc = j.at("proposal_cov");
      // A list whose first entry is a row of numbers is one matrix for all levels.
      const bool single_matrix = pc.is_array() && !pc.empty() && pc[0].is_array() && !pc[0].empty() && pc[0][0].is_number();
      if (pc.is_array() && !single_matrix) {
        if (pc.size() != n_levels)
          fail("field 'proposal_cov' must have " + std::to_string(n_levels) + " entries, got " + std::to_string(pc.size()));
        for (std::size_t l = 0; l < n_levels; ++l) c.proposal_cov.push_back(matrix_entries(pc[l], "proposal_cov", d));
      } else {
        c.proposal_cov.assign(n_levels, matrix_entries(pc, "proposal_cov", d));
      }
    } else {
      c.proposal_cov.assign(n_levels, {1.0});
    }

    if (j.contains("independent")) c.independent = parse_proposal(j.at("independent"), "independent", d, false);
    if (c.coupling == CouplingMethod::Independent && !c.independent)
      fail("coupling 'independent' requires field 'independent'");

    if (j.contains("omega")) {
      c.omega = j.at("omega").get<std::vector<double>>();
      if (c.omega.size() != static_cast<std::size_t>(c.max_level))
        fail("field 'omega' must have L = " + std::to_string(c.max_level) + " entries");
      for (double w : c.omega)
        if (w < 0.0 || w > 1.0) fail("field 'omega' entries must lie in [0, 1]");
    } else {
      c.omega = ResyncSchedule::default_for(c.max_level).weights;
    }
    if (j.contains("resync")) c.resync = parse_proposal(j.at("resync"), "resync", d, true);

    c.t_sub = j.value("t_sub", 0);
    c.target_alpha = j.contains("target_alpha") ? per_level<double>(j.at("target_alpha"), "target_alpha", n_levels)
                                                : std::vector<double>(n_levels, 0.44);
    for (double a : c.target_alpha)
      if (a <= 0.0 || a >= 1.0) fail("field 'target_alpha' entries must lie in (0, 1)");
    c.gamma_exponent = j.value("gamma_exponent", 0.7);
    if (c.gamma_exponent <= 0.5 || c.gamma_exponent > 1.0) fail("field 'gamma_exponent' must lie in (0.5, 1]");
    c.adapt_level0 = j.value("adapt_level0", true);
    c.theta0 = j.contains("theta0") ? j.at("theta0").get<std::vector<double>>() : std::vector<double>(static_cast<std::size_t>(d), 0.0);
    if (c.theta0.size() != static_cast<std::size_t>(d)) fail("field 'theta0' must have dimension " + std::to_string(d));
    if (j.contains("cost")) {
      c.cost = per_level<double>(j.at("cost"), "cost", n_levels);
    } else {
      for (int l = 0; l <= c.max_level; ++l)
        c.cost.push_back(c.model == ModelKind::Darcy ? std::ldexp(1.0, 2 * l) : 1.0);
    }
    c.max_stuck = j.value("max_stuck", std::uint64_t{1000});
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_replicates = j.value("n_replicates", 1);
    if (c.n_replicates < 1) fail("field 'n_replicates' must be at least 1");
    c.output_dir = j.value("output_dir", std::string("out"));

    if (c.model == ModelKind::Darcy) {
      if (!j.contains("data")) fail("model 'darcy' requires field 'data'");
      const json& data = j.at("data");
      for (const auto& [k, _] : data.items())
        if (k != "theta_true" && k != "observations") fail("unknown key 'data." + k + "'");
      if (!data.contains("observations")) fail("field 'data.observations' is required");
      c.data_file = base_dir / data.at("observations").get<std::string>();
      if (data.contains("theta_true")) c.theta_true_file = base_dir / data.at("theta_true").get<std::string>();
    } else if (j.contains("data")) {
      fail("field 'data' is only valid for model 'darcy'");
    }
  } catch (const json::exception& e) {
    fail(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

nlohmann::json ExperimentConfig::to_json() const {
  const int d = dim();
  json j;
  j["model"] = std::string(to_string(model));
  j["L"] = max_level;
  j["n_samples"] = n_samples;
  j["burn_in"] = burn_in;
  j["coupling"] = std::string(mlmcmc::to_string(coupling));
  json pc = json::array();
  for (const auto& m : proposal_cov) pc.push_back(matrix_json(m, d));
  j["proposal_cov"] = pc;
  if (independent) j["independent"] = proposal_json(*independent, d);
  j["omega"] = omega;
  j["resync"] = proposal_json(resync, d);
  j["t_sub"] = t_sub;
  j["target_alpha"] = target_alpha;
  j["gamma_exponent"] = gamma_exponent;
  j["adapt_level0"] = adapt_level0;
  j["theta0"] = theta0;
  j["cost"] = cost;
  j["max_stuck"] = max_stuck;
  j["seed"] = seed;
  j["n_replicates"] = n_replicates;
  j["output_dir"] = output_dir.string();
  if (model == ModelKind::Darcy) {
    j["data"]["observations"] = data_file.string();
    if (!theta_true_file.empty()) j["data"]["theta_true"] = theta_true_file.string();
  }
  return j;
}

CouplingConfig make_coupling_config(const ExperimentConfig& cfg) {
  const int d = cfg.dim();
  CouplingConfig cc;
  cc.method = cfg.coupling;
  for (const auto& m : cfg.proposal_cov) cc.proposal_cov.push_back(to_matrix(m, d));
  cc.schedule.weights = cfg.omega;
  cc.t_sub = cfg.t_sub;
  cc.target_alpha = cfg.target_alpha;
  cc.gamma_exponent = cfg.gamma_exponent;
  cc.adapt_level0 = cfg.adapt_level0;
  cc.theta0 = Eigen::Map<const ParamVector>(cfg.theta0.data(), d);
  cc.max_stuck = cfg.max_stuck;

  const auto level_mean = [&](const ProposalSpec& p, int level) -> std::optional<ParamVector> {
    switch (p.mean_source) {
      case ProposalSpec::MeanSource::Fixed: return ParamVector(Eigen::Map<const ParamVector>(p.mean.data(), d));
      case ProposalSpec::MeanSource::AnalyticMidpoint:
        return ParamVector(0.5 * (analytic_mean(cfg.model, level) + analytic_mean(cfg.model, level - 1)));
      case ProposalSpec::MeanSource::Adaptive: return std::nullopt;
    }
    return std::nullopt;
  };

  cc.independent.resize(static_cast<std::size_t>(cfg.max_level + 1));
  cc.resync.resize(static_cast<std::size_t>(cfg.max_level + 1));
  for (int l = 1; l <= cfg.max_level; ++l) {
    if (cfg.independent) {
      const auto mean = level_mean(*cfg.independent, l);
      cc.independent[static_cast<std::size_t>(l)] = GaussianSpec(*mean, to_matrix(cfg.independent->cov, d));
    }
    ResyncSpec& rs = cc.resync[static_cast<std::size_t>(l)];
    rs.mean = level_mean(cfg.resync, l);
    if (!cfg.resync.cov.empty()) rs.covariance = to_matrix(cfg.resync.cov, d);
  }
  return cc;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = cfg.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mlmcmc
