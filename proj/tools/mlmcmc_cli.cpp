// Command-line driver: run / summarize / validate experiments and generate
// the Darcy fixtures.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "mlmcmc/config.hpp"
#include "mlmcmc/errors.hpp"
#include "mlmcmc/experiment.hpp"
#include "mlmcmc/models.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled multilevel MCMC experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the base seed");
  run->add_option("--replicates", replicates, "Override the number of replicates");
  run->add_option("--out", out_dir, "Override the output directory");

  auto* summarize = app.add_subcommand("summarize", "Recompute and print a summary from stored samples");
  summarize->add_option("--in", in_dir, "Output directory of a previous run")->required();

  auto* validate = app.add_subcommand("validate", "Parse a config and echo it with defaults resolved");
  validate->add_option("--config", config_path, "Experiment config (JSON)")->required();

  int gen_level = 4;
  std::uint64_t theta_seed = 20240501, noise_seed = 20240502;
  std::string data_dir = "data";
  auto* gen = app.add_subcommand("gen-data", "Draw theta_true and synthetic Darcy observations");
  gen->add_option("--level", gen_level, "Finest level used for the forward solve");
  gen->add_option("--theta-seed", theta_seed, "Seed for theta_true ~ N(0, I)");
  gen->add_option("--noise-seed", noise_seed, "Seed for the observation noise");
  gen->add_option("--out", data_dir, "Directory for the fixture files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto cfg = mlmcmc::parse_config_file(config_path);
      std::cout << cfg.to_json().dump(2) << '\n';
      return 0;
    }
    if (*run) {
      mlmcmc::ExperimentConfig cfg;
      try {
        cfg = mlmcmc::parse_config_file(config_path);
      } catch (const mlmcmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
      }
      if (seed) cfg.seed = *seed;
      if (replicates) {
        if (*replicates < 1) {
          std::cerr << "config error: --replicates must be at least 1\n";
          return kExitConfig;
        }
        cfg.n_replicates = *replicates;
      }
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto artifacts = mlmcmc::run_experiment(cfg);
      mlmcmc::emit_summary(artifacts, std::cout);
      return 0;
    }
    if (*summarize) {
      const auto rebuilt = mlmcmc::summarize_dir(in_dir);
      std::cout << mlmcmc::format_summary(rebuilt);
      nlohmann::json stored;
      std::ifstream(std::filesystem::path(in_dir) / "summary.json") >> stored;
      for (std::size_t r = 0; r < stored["replicates"].size(); ++r) {
        auto a = stored["replicates"][r], b = rebuilt["replicates"][r];
        a.erase("run_info");
        b.erase("run_info");
        if (a != b) {
          std::cerr << "summary mismatch: replicate " << r << " statistics differ from its sample files\n";
          return kExitRuntime;
        }
      }
      return 0;
    }
    if (*gen) {
      mlmcmc::RngStream rng(theta_seed, 0);
      const mlmcmc::ParamVector theta_true = mlmcmc::standard_normal(mlmcmc::models::kDarcyDim, rng);
      const auto data = mlmcmc::models::generate_synthetic_data(gen_level, theta_true, noise_seed);
      std::filesystem::create_directories(data_dir);
      mlmcmc::models::write_vector(std::filesystem::path(data_dir) / "darcy_theta_true.txt", theta_true);
      mlmcmc::models::write_vector(std::filesystem::path(data_dir) / "darcy_data.txt", data);
      std::cout << "theta_true = " << theta_true.transpose() << '\n';
      return 0;
    }
  } catch (const mlmcmc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
