#pragma once

#include "ncs/sim_harness.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ncs {

struct SolverConfig {
  // Limit for programs above exactThreshold binaries.
  double timeLimitSeconds = 60.0;
  int exactThreshold = 600;
  // Relative gap above which a time-limited run counts as failed (exit 4).
  double maxGap = 0.05;
  // Overrides the per-program default freshness encoding.
  std::optional<FreshnessEncoding> freshnessEncoding;
};

struct OutputConfig {
  std::string dir;  // empty: no files
  bool emitSvg = false;
  int traceReplications = 1;
};

struct ExperimentConfig {
  int horizon = 0;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<AllocationRegime> regimes;
  NetworkModel network;
  std::vector<PlantModel> subsystems;  // repeats expanded
  std::vector<std::string> groups;     // group name of each sub-system
  std::vector<double> weights;         // empty: uniform
  SolverConfig solver;
  OutputConfig outputs;
};

/// Parses the JSON experiment description. Throws ConfigError with the
/// offending field on any problem.
ExperimentConfig parse_config(const std::string& jsonText);
ExperimentConfig load_config(const std::filesystem::path& path);

Scenario to_scenario(const ExperimentConfig& cfg);

struct RunSummary {
  ExperimentResult result;
  double maxGap = 0.0;
  bool gapExceeded = false;
  std::vector<std::filesystem::path> files;
};

/// Plans, simulates and writes trace.csv, metrics.csv, utilization.csv and
/// deviation.csv (plus SVG charts when enabled) into cfg.outputs.dir.
RunSummary run_experiment(const ExperimentConfig& cfg);

// CSV/SVG writers, also used by the CLI's plot command.
void write_trace_csv(const std::filesystem::path& path, const std::vector<EpisodeTrace>& traces);
void write_metrics_csv(const std::filesystem::path& path, const ExperimentResult& result);
void write_utilization_csv(const std::filesystem::path& path, const ExperimentResult& result, int D);
void write_deviation_csv(const std::filesystem::path& path, const ExperimentResult& result);

/// Reads a numeric CSV whose first column is the x axis and draws one line per
/// remaining column.
void plot_csv(const std::filesystem::path& csv, const std::filesystem::path& svg);
/// Bar chart of the fleet mean cost and social cost per regime.
void write_cost_svg(const std::filesystem::path& path, const ExperimentResult& result);

}  // namespace ncs
