#pragma once

// Batch sweeps over (mu, R) grids: configuration, threshold validation,
// parallel execution and the CSV / JSON / gnuplot artifacts.
//
// Config file (JSON):
//   "scene"            path to a scene file, relative to the config file
//   "mu"               {"start", "stop", "count"} or a list of values
//   "R"                list of truncation radii, ascending
//   "h"                mesh size
//   "zeta"             impedance parameter (default 1)
//   "threshold_guard"  default 1e-3
//   "grade_corners"    default false
//   "element_order"    1 or 2 (default 2)
//   "workers"          default 1
//   "output_dir"       default "wavescat-out", relative to the config file

#include "wavescat/geometry.hpp"
#include "wavescat/scattering.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wavescat {

struct RunConfig {
  std::filesystem::path scene_path;
  std::vector<double> mu;
  /// Set when mu came from {start, stop, count}: the closed interval that
  /// must be free of thresholds.
  std::optional<std::pair<double, double>> mu_interval;
  std::vector<double> R_list;
  double h = 0.0;
  double zeta = 1.0;
  double threshold_guard = kDefaultThresholdGuard;
  bool grade_corners = false;
  int element_order = 2;
  int workers = 1;
  std::filesystem::path output_dir = "wavescat-out";
};

/// Throws ConfigError on missing keys, wrong types or inadmissible values.
/// Relative paths are resolved against base_dir.
RunConfig config_from_json(const nlohmann::json &doc, const std::filesystem::path &base_dir);

/// Reads a config file. Malformed JSON throws ConfigError whose message
/// carries the line and column of the error.
RunConfig load_config(const std::filesystem::path &path);

struct GridPointInfo {
  double mu = 0.0;
  int M = 0;
  std::vector<int> per_end;
  double gamma_estimate = 0.0;
};

/// Checks the mu grid (and interval) against every threshold of the scene.
/// Throws ThresholdProximity naming the offending nu_k.
std::vector<GridPointInfo> validate_grid(const RunConfig &config, const WaveguideScene &scene);

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitThreshold = 3,
  kExitNumerical = 4,
};

/// Dry run: prints M(mu) and gamma_estimate per grid point.
int validate_command(const RunConfig &config, std::ostream &out, std::ostream &err);

/// Full sweep; writes results.csv, convergence.csv, summary.json, plots.gp
/// into config.output_dir.
int run_command(const RunConfig &config, std::ostream &out, std::ostream &err);

/// Per-mu convergence report derived from one result per R (ascending).
struct MuSummary {
  double mu = 0.0;
  int M = 0;
  double gamma_estimate = 0.0;
  double unitarity_defect_at_max_R = 0.0;
  double cond_E_min = 0.0;
  double cond_E_max = 0.0;
  double min_eig_E_min = 0.0;
  std::vector<ConvergencePoint> points; ///< filled even when no fit is possible
  std::optional<ConvergenceStudy> study;
  std::string fit_status; ///< "ok", "floor-limited", or why no fit was made
};

MuSummary summarize_mu(std::span<const ScatteringResult> results);

/// Artifact writers; `complete` false appends the "# INCOMPLETE" trailer.
void write_results_csv(std::ostream &os, std::span<const ScatteringResult> results, bool complete);
void write_convergence_csv(std::ostream &os, std::span<const MuSummary> summaries, bool complete);
nlohmann::json summary_json(std::span<const MuSummary> summaries, const RunConfig &config,
                            bool complete);
void write_plot_script(std::ostream &os, std::span<const MuSummary> summaries);

} // namespace wavescat
