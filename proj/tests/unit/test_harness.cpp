#include "doctest.h"
#include "mlmcmc/config.hpp"
#include "mlmcmc/errors.hpp"
#include "mlmcmc/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace mlmcmc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = MLMCMC_TEST_SOURCE_DIR;

json small_config() {
  return json{{"model", "shifting"}, {"L", 2},           {"n_samples", 600}, {"burn_in", 200},
              {"coupling", "synce_ar"}, {"omega", {0.1, 0.3}}, {"seed", 4},  {"n_replicates", 2}};
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mlmcmc_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("unknown keys are rejected by name") {
  json j = small_config();
  j["n_sample"] = 5;
  const std::string msg = config_error(j);
  CHECK(msg.find("unknown key 'n_sample'") != std::string::npos);
}

TEST_CASE("all missing required keys are reported together") {
  const std::string msg = config_error(json{{"model", "shifting"}, {"L", 1}});
  for (const char* k : {"n_samples", "burn_in", "coupling", "seed"}) CHECK(msg.find(k) != std::string::npos);
}

TEST_CASE("per-level lists of the wrong length name the field") {
  json j = small_config();
  j["n_samples"] = {600, 600};
  CHECK(config_error(j).find("'n_samples'") != std::string::npos);
  j = small_config();
  j["target_alpha"] = {0.44, 0.44, 0.44, 0.44};
  CHECK(config_error(j).find("'target_alpha'") != std::string::npos);
  j = small_config();
  j["omega"] = {0.1, 0.2, 0.3};
  CHECK(config_error(j).find("'omega'") != std::string::npos);
}

TEST_CASE("invalid values") {
  json j = small_config();
  j["coupling"] = "magic";
  CHECK(config_error(j).find("'coupling'") != std::string::npos);
  j = small_config();
  j["burn_in"] = 600;
  CHECK(config_error(j).find("exceed") != std::string::npos);
  j = small_config();
  j["omega"] = {0.1, 1.5};
  CHECK_FALSE(config_error(j).empty());
  j = small_config();
  j["coupling"] = "independent";
  CHECK(config_error(j).find("'independent'") != std::string::npos);
  j = small_config();
  j["data"] = {{"observations", "x.txt"}};
  CHECK(config_error(j).find("'data'") != std::string::npos);
}

TEST_CASE("defaults are resolved") {
  const ExperimentConfig c = parse_config(small_config());
  CHECK(c.target_alpha == std::vector<double>(3, 0.44));
  CHECK(c.gamma_exponent == 0.7);
  CHECK(c.cost == std::vector<double>(3, 1.0));
  CHECK(c.proposal_cov.size() == 3);
  json d = small_config();
  d.erase("omega");
  CHECK(parse_config(d).omega == ResyncSchedule::default_for(2).weights);
}

TEST_CASE("canonical JSON re-parses to the same config") {
  const ExperimentConfig c = parse_config(small_config());
  const ExperimentConfig again = parse_config(c.to_json());
  CHECK(again.to_json() == c.to_json());
  CHECK(config_hash(again) == config_hash(c));
  json other = small_config();
  other["seed"] = 5;
  CHECK(config_hash(parse_config(other)) != config_hash(c));
}

TEST_CASE("bundled shifting SYNCE config") {
  const ExperimentConfig c = parse_config_file(kSource / "configs" / "shifting_synce.json");
  CHECK(c.model == ModelKind::Shifting);
  CHECK(c.max_level == 6);
  CHECK(c.coupling == CouplingMethod::Synce);
  CHECK(c.n_samples[6] == 50000);
  CHECK(c.burn_in[0] == 20000);
  const CouplingConfig cc = make_coupling_config(c);
  CHECK(cc.cov(3, 1)(0, 0) == 3.0);
  CHECK(cc.cov(0, 1)(0, 0) == 1.0);
}

TEST_CASE("bundled Darcy config") {
  const ExperimentConfig c = parse_config_file(kSource / "configs" / "darcy_synce_ar.json");
  CHECK(c.model == ModelKind::Darcy);
  CHECK(c.max_level == 4);
  CHECK(c.omega == std::vector<double>{0.0, 0.3, 0.5, 0.7});
  CHECK(fs::exists(c.data_file));
  const auto levels = build_levels(c);
  REQUIRE(levels.size() == 5);
  CHECK(std::isfinite(levels[2].target(ParamVector::Zero(4))));
}

TEST_CASE("every bundled config parses") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(kSource / "configs")) {
    if (e.path().extension() != ".json") continue;
    CHECK_NOTHROW(parse_config_file(e.path()));
    ++n;
  }
  CHECK(n >= 10);
}

TEST_CASE("experiment output is deterministic and well formed") {
  ExperimentConfig c = parse_config(small_config());
  c.output_dir = scratch("harness_a");
  const RunArtifacts a = run_experiment(c);
  c.output_dir = scratch("harness_b");
  const RunArtifacts b = run_experiment(c);

  for (const char* rel : {"replicate_000/level_0.csv", "replicate_001/level_2.csv"})
    CHECK(slurp(a.dir / rel) == slurp(b.dir / rel));
  CHECK(a.summary.at("replicates").at(1).at("estimate") == b.summary.at("replicates").at(1).at("estimate"));
  CHECK(a.summary.at("replicates").at(0).at("estimate") != a.summary.at("replicates").at(1).at("estimate"));

  std::ifstream in(a.dir / "replicate_000" / "level_1.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "iter,theta_fine_0,theta_coarse_0,q_fine,q_coarse,accept_fine,accept_coarse");
  CHECK(row.rfind("201,", 0) == 0);
  std::ifstream in0(a.dir / "replicate_000" / "level_0.csv");
  std::getline(in0, header);
  std::getline(in0, row);
  // Level 0 leaves the coarse columns empty.
  CHECK(row.find(",,") != std::string::npos);

  const json& prov = a.summary.at("provenance");
  CHECK(prov.at("seed") == 4);
  CHECK(prov.at("config_hash").get<std::string>().size() == 16);
  CHECK(a.summary.at("across_replicates").at("n_replicates") == 2);
  fs::remove_all(a.dir);
  fs::remove_all(b.dir);
}

TEST_CASE("summary round-trips through the sample files") {
  ExperimentConfig c = parse_config(small_config());
  c.output_dir = scratch("harness_roundtrip");
  const RunArtifacts a = run_experiment(c);
  std::ifstream in(a.dir / "summary.json");
  json stored;
  in >> stored;
  CHECK(stored == a.summary);

  const json rebuilt = summarize_dir(a.dir);
  for (std::size_t r = 0; r < 2; ++r) {
    const json& x = stored.at("replicates").at(r);
    const json& y = rebuilt.at("replicates").at(r);
    CHECK(y.at("estimate").get<double>() == doctest::Approx(x.at("estimate").get<double>()).epsilon(1e-14));
    for (std::size_t l = 0; l < 3; ++l) {
      const json& lx = x.at("levels").at(l);
      const json& ly = y.at("levels").at(l);
      CHECK(ly.at("n") == lx.at("n"));
      CHECK(ly.at("y_var").get<double>() == doctest::Approx(lx.at("y_var").get<double>()).epsilon(1e-12));
      CHECK(ly.at("acceptance_fine") == lx.at("acceptance_fine"));
      CHECK(ly.at("rho").is_null() == lx.at("rho").is_null());
    }
  }
  fs::remove_all(a.dir);
}

TEST_CASE("summary table shows n/a for missing statistics") {
  MLMCResult r;
  LevelRun l0;
  l0.q_fine = {1.0, 2.0, 3.0};
  summarize_level(l0);
  r.per_level.push_back(l0);
  LevelRun empty;
  empty.level = 1;
  r.per_level.push_back(empty);
  json summary;
  summary["provenance"] = {{"config_hash", "0000000000000000"}, {"seed", 1}, {"version", kVersion}};
  summary["replicates"] = json::array({replicate_summary(0, r, 0.0)});
  summary["across_replicates"] = across_replicates(summary["replicates"]);
  const std::string text = format_summary(summary);
  CHECK(text.find("n/a") != std::string::npos);
  CHECK(summary["replicates"][0]["levels"][1]["y_mean"].is_null());
  CHECK(summary["replicates"][0]["levels"][0]["rho"].is_null());
}

}  // TEST_SUITE
