#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mlmcmc/config.hpp"
#include "mlmcmc/mlmc.hpp"

namespace mlmcmc {

inline constexpr const char* kVersion = "0.1.0";

/// Level specs for one replicate. Darcy levels carry their own solve cache,
/// so build a fresh hierarchy per concurrent run.
std::vector<LevelSpec> build_levels(const ExperimentConfig& cfg);

/// Column order of the per-level sample files.
std::vector<std::string> csv_header(int dim);
void write_level_csv(const std::filesystem::path& path, const LevelRun& run, std::uint64_t burn_in, int dim);
/// Rebuild a LevelRun (samples and summary statistics) from a sample file.
LevelRun read_level_csv(const std::filesystem::path& path, int level, int dim);

struct RunArtifacts {
  std::filesystem::path dir;
  nlohmann::json summary;
};

/// Runs all replicates (in parallel up to MLMCMC_THREADS), writes
/// replicate_NNN/level_L.csv plus summary.json under cfg.output_dir.
RunArtifacts run_experiment(const ExperimentConfig& cfg);

/// Summary block for one replicate.
nlohmann::json replicate_summary(int replicate, const MLMCResult& result, double wall_seconds);
/// Across-replicate statistics.
nlohmann::json across_replicates(const nlohmann::json& replicates);

/// Human-readable table rendered purely from the JSON summary.
std::string format_summary(const nlohmann::json& summary);
void emit_summary(const RunArtifacts& artifacts, std::ostream& out);

/// Recompute every replicate's statistics from the stored sample files.
/// Returns the rebuilt summary (provenance copied from the stored one).
nlohmann::json summarize_dir(const std::filesystem::path& dir);

}  // namespace mlmcmc
