#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "htsf/arima.hpp"
#include "htsf/data.hpp"
#include "htsf/gbdt.hpp"
#include "htsf/hierarchy.hpp"
#include "htsf/reconcile.hpp"
#include "htsf/scope.hpp"

namespace htsf {

struct RunConfig {
  std::filesystem::path sales;
  std::filesystem::path edges;
  std::filesystem::path bottom_order;
  bool m5_template = false;  // use the built-in Total/state/store tree instead of edge files
  std::size_t lags = 60;
  std::size_t holdout = 28;
  std::vector<ModelFamily> models;
  // Base forecasts (none) are always evaluated alongside the listed methods.
  std::vector<ReconMethod> reconciliations{ReconMethod::kNone};
  bool grid_search = false;
  std::uint64_t seed = 42;
  std::filesystem::path output = "htsf-run";
  std::size_t workers = 0;  // 0 = available parallelism
  GbdtParams gbdt;
  ArimaOrder arima_order;
  bool floor_at_zero = false;
  double mcb_alpha = 0.05;

  // Stable (sorted-key) JSON snapshot with absolute paths.
  nlohmann::json to_json() const;
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

// Parses a config document. Relative paths resolve against `base_dir`.
// Every problem found is appended to `issues`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       std::vector<ConfigIssue>& issues);
// Throws UserError listing every issue.
RunConfig load_config(const std::filesystem::path& path);

// Schema, file existence and hierarchy/data consistency checks.
std::vector<ConfigIssue> validate_config(const std::filesystem::path& path);

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<std::size_t> workers;
};

// Flags > HTSF_THREADS > config > available parallelism.
std::size_t resolve_workers(const RunConfig& config, const CliOverrides& overrides);

struct RunSummary {
  std::filesystem::path artifact;
  std::string results_table;
  std::size_t models_persisted = 0;
};

// Executes every stage and writes the artifact directory:
//   config.json, status.json, run.log, scales.csv, forecasts/<family>.csv,
//   models/..., results_table.csv, mcb.csv, boxplot.csv, mcb.svg
RunSummary cmd_run(const std::filesystem::path& config_path, const CliOverrides& overrides = {});
RunSummary run_pipeline(RunConfig config, std::size_t workers);

// Regenerates results_table.csv, mcb.csv, boxplot.csv and mcb.svg from the
// persisted forecasts and scales. Never touches forecast files.
std::string cmd_report(const std::filesystem::path& artifact_dir);

struct SynthSpec {
  std::size_t hierarchies = 5;
  std::size_t bottoms = 4;
  std::size_t groups = 2;  // middle-level nodes; 0 links bottoms to the root
  std::size_t length = 300;
  double noise = 0.1;
  double sharing = 0.8;
  double level = 10.0;
  double ar_coefficient = 0.7;
  std::uint64_t seed = 1;
  bool m5_tree = false;  // 10 bottoms under CA/TX/WI (4/3/3)
};

struct SynthData {
  Hierarchy hierarchy;
  SalesPanel panel;
  // Latent log-scale signal z per bottom series, panel order.
  std::vector<std::vector<double>> signals;
};

// Bottom series y = level * exp(0.5 z + noise * eta) with
// z = sqrt(sharing) c_t + sqrt(1 - sharing) e_t, where c (shared by every
// series) and e (per series) are unit-variance AR(1) processes.
SynthData synthesize(const SynthSpec& spec);
// Writes sales.csv, edges.csv, bottom_order.txt and config.json.
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace htsf
