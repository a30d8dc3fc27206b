#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "htsf/error.hpp"
#include "htsf/runner.hpp"

namespace {

int run_validate(const std::string& config) {
  const auto issues = htsf::validate_config(config);
  if (issues.empty()) {
    std::cout << "OK\n";
    return 0;
  }
  for (const auto& issue : issues) std::cerr << issue.field << ": " << issue.message << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical sales forecasting with local and global models"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a run config and its input files");
  validate->add_option("config", validate_path, "Config JSON")->required();

  htsf::SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic hierarchical sales dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--hierarchies", spec.hierarchies, "Number of hierarchies")->capture_default_str();
  synth->add_option("--bottoms", spec.bottoms, "Bottom series per hierarchy")->capture_default_str();
  synth->add_option("--groups", spec.groups, "Middle-level nodes (0 = none)")->capture_default_str();
  synth->add_option("--length", spec.length, "Series length T")->capture_default_str();
  synth->add_option("--noise", spec.noise, "Observation noise on the log scale")->capture_default_str();
  synth->add_option("--sharing", spec.sharing, "Weight of the shared signal in [0, 1]")->capture_default_str();
  synth->add_option("--level", spec.level, "Sales level")->capture_default_str();
  synth->add_option("--ar", spec.ar_coefficient, "AR(1) coefficient of the latent signals")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  synth->add_flag("--m5-tree", spec.m5_tree, "Use the 3-state, 10-store tree");

  std::string run_path;
  htsf::CliOverrides overrides;
  auto* run = app.add_subcommand("run", "Train, forecast, reconcile and evaluate");
  run->add_option("config", run_path, "Config JSON")->required();
  run->add_option("--seed", overrides.seed, "Override the config seed");
  run->add_option("--output", overrides.output, "Override the artifact directory");
  run->add_option("--workers", overrides.workers, "Worker threads")->check(CLI::PositiveNumber);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Regenerate evaluation outputs from an artifact");
  report->add_option("artifact", report_dir, "Artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) return run_validate(validate_path);
    if (*synth) {
      htsf::cmd_synth(spec, synth_out);
      std::cout << "wrote " << synth_out << '\n';
      return 0;
    }
    if (*run) {
      const auto summary = htsf::cmd_run(run_path, overrides);
      std::cout << summary.results_table;
      std::cerr << "artifact: " << summary.artifact.string() << '\n';
      return 0;
    }
    if (*report) {
      std::cout << htsf::cmd_report(report_dir);
      return 0;
    }
  } catch (const htsf::UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
