#include "mlmcmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mlmcmc/diagnostics.hpp"
#include "mlmcmc/models.hpp"

namespace mlmcmc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string replicate_dir_name(int r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate_%03d", r);
  return buf;
}

int thread_count(int jobs) {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MLMCMC_THREADS")) n = std::atoi(env);
  return std::clamp(n, 1, std::max(jobs, 1));
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<LevelSpec> build_levels(const ExperimentConfig& cfg) {
  std::vector<LevelSpec> levels;
  const auto n_levels = static_cast<std::size_t>(cfg.max_level + 1);
  Eigen::VectorXd data;
  if (cfg.model == ModelKind::Darcy) data = models::read_vector(cfg.data_file);

  for (std::size_t l = 0; l < n_levels; ++l) {
    const int level = static_cast<int>(l);
    LevelSpec spec{level, models::shifting_target(level), nullptr, cfg.cost[l], cfg.n_samples[l], cfg.burn_in[l]};
    switch (cfg.model) {
      case ModelKind::Shifting:
        spec.qoi = [](const ParamVector& t) { return t[0]; };
        break;
      case ModelKind::Rotating:
        spec.target = models::rotating_target(level);
        spec.qoi = [](const ParamVector& t) { return t[0]; };
        break;
      case ModelKind::Darcy: {
        auto model = std::make_shared<const models::DarcyModel>(level, data);
        auto eval = std::make_shared<models::DarcyLevelEvaluator>(model);
        spec.target = LogTarget(models::kDarcyDim, [eval](const ParamVector& t) { return eval->log_posterior(t); });
        spec.qoi = [eval](const ParamVector& t) { return eval->qoi(t); };
        break;
      }
    }
    levels.push_back(std::move(spec));
  }
  return levels;
}

std::vector<std::string> csv_header(int dim) {
  std::vector<std::string> h{"iter"};
  for (int k = 0; k < dim; ++k) h.push_back("theta_fine_" + std::to_string(k));
  for (int k = 0; k < dim; ++k) h.push_back("theta_coarse_" + std::to_string(k));
  for (const char* c : {"q_fine", "q_coarse", "accept_fine", "accept_coarse"}) h.emplace_back(c);
  return h;
}

void write_level_csv(const fs::path& path, const LevelRun& run, std::uint64_t burn_in, int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path.string());
  const auto header = csv_header(dim);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  const bool coupled = !run.q_coarse.empty();
  for (std::size_t i = 0; i < run.size(); ++i) {
    out << burn_in + i + 1;
    for (int k = 0; k < dim; ++k) out << ',' << fmt17(run.theta_fine[i][k]);
    for (int k = 0; k < dim; ++k) out << ',' << (coupled ? fmt17(run.theta_coarse[i][k]) : "");
    out << ',' << fmt17(run.q_fine[i]) << ',' << (coupled ? fmt17(run.q_coarse[i]) : "");
    out << ',' << int(run.accept_fine[i]) << ',' << (coupled ? std::to_string(int(run.accept_coarse[i])) : "");
    out << '\n';
  }
}

LevelRun read_level_csv(const fs::path& path, int level, int dim) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot read " + path.string());
  LevelRun run;
  run.level = level;
  std::string line;
  std::getline(in, line);
  const std::size_t n_cols = csv_header(dim).size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < n_cols) cells.resize(n_cols);
    if (cells.size() != n_cols) throw ModelError("malformed row in " + path.string());
    ParamVector tf(dim), tc(dim);
    for (int k = 0; k < dim; ++k) tf[k] = std::stod(cells[1 + k]);
    const bool coupled = !cells[1 + dim].empty();
    run.theta_fine.push_back(tf);
    run.q_fine.push_back(std::stod(cells[1 + 2 * dim]));
    run.accept_fine.push_back(cells[3 + 2 * dim] == "1");
    if (coupled) {
      for (int k = 0; k < dim; ++k) tc[k] = std::stod(cells[1 + dim + k]);
      run.theta_coarse.push_back(tc);
      run.q_coarse.push_back(std::stod(cells[2 + 2 * dim]));
      run.accept_coarse.push_back(cells[4 + 2 * dim] == "1");
    }
  }
  summarize_level(run);
  return run;
}

json replicate_summary(int replicate, const MLMCResult& result, double wall_seconds) {
  json rep;
  rep["replicate"] = replicate;
  rep["estimate"] = result.estimate;
  rep["estimator_variance"] = result.estimator_variance;
  rep["standard_error"] = std::sqrt(result.estimator_variance);
  json levels = json::array();
  for (const LevelRun& r : result.per_level) {
    json l;
    l["level"] = r.level;
    l["n"] = r.size();
    const bool empty = r.size() == 0;
    const bool coupled = !r.q_coarse.empty();
    l["rho"] = opt_json(r.rho);
    l["y_mean"] = empty ? json(nullptr) : json(r.y_mean);
    l["y_var"] = empty ? json(nullptr) : json(r.y_var);
    l["y_ess"] = empty ? json(nullptr) : json(r.y_ess);
    l["ess_fine"] = r.size() >= 10 ? json(autocorrelation_ess(r.q_fine).ess) : json(nullptr);
    l["acceptance_fine"] = empty ? json(nullptr) : json(r.acceptance_fine);
    l["acceptance_coarse"] = coupled ? json(r.acceptance_coarse) : json(nullptr);
    levels.push_back(l);
  }
  rep["levels"] = levels;
  json info;
  info["wall_time_s"] = wall_seconds;
  info["total_cost"] = result.total_cost;
  json per = json::array();
  for (const LevelRun& r : result.per_level)
    per.push_back({{"level", r.level}, {"resync_rate", r.resync_rate}, {"t_sub", r.t_sub}, {"cost", r.cost}});
  info["levels"] = per;
  rep["run_info"] = info;
  return rep;
}

json across_replicates(const json& replicates) {
  json a;
  std::vector<double> est, within;
  for (const auto& r : replicates) {
    est.push_back(r.at("estimate").get<double>());
    within.push_back(r.at("estimator_variance").get<double>());
  }
  a["n_replicates"] = est.size();
  a["estimate_mean"] = mean(est);
  a["estimate_variance"] = est.size() >= 2 ? json(sample_variance(est)) : json(nullptr);
  a["mean_within_run_variance"] = mean(within);
  json levels = json::array();
  if (!replicates.empty()) {
    const std::size_t n_levels = replicates[0].at("levels").size();
    for (std::size_t l = 0; l < n_levels; ++l) {
      std::vector<double> ym, yv, rho;
      for (const auto& r : replicates) {
        const json& lv = r.at("levels").at(l);
        if (!lv.at("y_mean").is_null()) ym.push_back(lv.at("y_mean").get<double>());
        if (!lv.at("y_var").is_null()) yv.push_back(lv.at("y_var").get<double>());
        if (!lv.at("rho").is_null()) rho.push_back(lv.at("rho").get<double>());
      }
      json e;
      e["level"] = l;
      e["y_mean_mean"] = ym.empty() ? json(nullptr) : json(mean(ym));
      e["y_mean_variance"] = ym.size() >= 2 ? json(sample_variance(ym)) : json(nullptr);
      e["y_var_mean"] = yv.empty() ? json(nullptr) : json(mean(yv));
      e["rho_mean"] = rho.empty() ? json(nullptr) : json(mean(rho));
      levels.push_back(e);
    }
  }
  a["levels"] = levels;
  return a;
}

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  const CouplingConfig cc = make_coupling_config(cfg);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const int n_rep = cfg.n_replicates;
  std::vector<json> reps(static_cast<std::size_t>(n_rep));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_rep));
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int r = next++; r < n_rep; r = next++) {
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<LevelSpec> levels = build_levels(cfg);
        const MLMCResult result = run_ml_mcmc(levels, cc, cfg.seed, static_cast<std::uint64_t>(r));
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const fs::path rdir = dir / replicate_dir_name(r);
        fs::create_directories(rdir);
        for (const LevelRun& lr : result.per_level)
          write_level_csv(rdir / ("level_" + std::to_string(lr.level) + ".csv"), lr,
                          cfg.burn_in[static_cast<std::size_t>(lr.level)], cfg.dim());
        reps[static_cast<std::size_t>(r)] = replicate_summary(r, result, wall);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const int n_threads = thread_count(n_rep);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  json summary;
  summary["provenance"] = {{"config_hash", config_hash(cfg)},
                           {"seed", cfg.seed},
                           {"version", kVersion},
                           {"config", cfg.to_json()}};
  summary["replicates"] = reps;
  summary["across_replicates"] = across_replicates(summary["replicates"]);
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  return {dir, summary};
}

std::string format_summary(const json& summary) {
  std::ostringstream out;
  const auto num = [](const json& v, const char* f = "%.6g") -> std::string {
    if (v.is_null()) return "n/a";
    char buf[40];
    std::snprintf(buf, sizeof buf, f, v.get<double>());
    return buf;
  };
  const json& prov = summary.at("provenance");
  out << "config " << prov.at("config_hash").get<std::string>() << "  seed " << prov.at("seed").get<std::uint64_t>()
      << "  version " << prov.at("version").get<std::string>() << '\n';
  for (const auto& rep : summary.at("replicates")) {
    out << "replicate " << rep.at("replicate").get<int>() << ": estimate " << num(rep.at("estimate"), "%.8g")
        << "  se " << num(rep.at("standard_error")) << '\n';
    char head[160];
    std::snprintf(head, sizeof head, "  %5s %8s %9s %12s %12s %10s %10s %8s %8s\n", "level", "n", "rho", "E[Y]",
                  "V[Y]", "ESS(Y)", "ESS(Q)", "acc_f", "acc_c");
    out << head;
    for (const auto& l : rep.at("levels")) {
      char row[200];
      std::snprintf(row, sizeof row, "  %5d %8llu %9s %12s %12s %10s %10s %8s %8s\n", l.at("level").get<int>(),
                    static_cast<unsigned long long>(l.at("n").get<std::uint64_t>()), num(l.at("rho"), "%.4f").c_str(),
                    num(l.at("y_mean")).c_str(), num(l.at("y_var")).c_str(), num(l.at("y_ess"), "%.1f").c_str(),
                    num(l.at("ess_fine"), "%.1f").c_str(), num(l.at("acceptance_fine"), "%.3f").c_str(),
                    num(l.at("acceptance_coarse"), "%.3f").c_str());
      out << row;
    }
  }
  const json& a = summary.at("across_replicates");
  out << "across " << a.at("n_replicates").get<std::size_t>() << " replicates: mean estimate "
      << num(a.at("estimate_mean"), "%.8g") << "  variance " << num(a.at("estimate_variance")) << '\n';
  for (const auto& l : a.at("levels")) {
    out << "  level " << l.at("level").get<int>() << ": mean E[Y] " << num(l.at("y_mean_mean")) << "  var E[Y] "
        << num(l.at("y_mean_variance")) << "  mean V[Y] " << num(l.at("y_var_mean")) << "  mean rho "
        << num(l.at("rho_mean"), "%.4f") << '\n';
  }
  return out.str();
}

void emit_summary(const RunArtifacts& artifacts, std::ostream& out) { out << format_summary(artifacts.summary); }

json summarize_dir(const fs::path& dir) {
  std::ifstream in(dir / "summary.json");
  if (!in) throw ModelError("no summary.json in " + dir.string());
  json stored;
  in >> stored;
  const json& config = stored.at("provenance").at("config");
  const ExperimentConfig cfg = parse_config(config);

  json reps = json::array();
  for (const auto& old : stored.at("replicates")) {
    const int r = old.at("replicate").get<int>();
    MLMCResult result;
    for (int l = 0; l <= cfg.max_level; ++l)
      result.per_level.push_back(
          read_level_csv(dir / replicate_dir_name(r) / ("level_" + std::to_string(l) + ".csv"), l, cfg.dim()));
    const Combined c = combine_estimate(result.per_level);
    result.estimate = c.estimate;
    result.estimator_variance = c.estimator_variance;
    json rep = replicate_summary(r, result, 0.0);
    rep["run_info"] = old.at("run_info");
    reps.push_back(rep);
  }
  json rebuilt;
  rebuilt["provenance"] = stored.at("provenance");
  rebuilt["replicates"] = reps;
  rebuilt["across_replicates"] = across_replicates(reps);
  return rebuilt;
}

}  // namespace mlmcmc
