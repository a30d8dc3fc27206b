#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "htsf/error.hpp"
#include "htsf/runner.hpp"

using namespace htsf;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "htsf_runner_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Small synthetic dataset with a config for {es, gbdt-nfg} x {bu}.
fs::path small_setup(const std::string& name) {
  const fs::path dir = fresh_dir(name);
  SynthSpec spec;
  spec.hierarchies = 5;
  spec.length = 120;
  spec.seed = 3;
  cmd_synth(spec, dir);
  nlohmann::json cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["lags"] = 20;
  cfg["models"] = {"es", "gbdt-nfg"};
  cfg["reconciliations"] = {"bu"};
  cfg["gbdt"] = {{"num_rounds", 20}, {"min_leaf_samples", 5}};
  write_json(dir / "config.json", cfg);
  return dir;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("synthetic data") {
  SynthSpec spec;
  spec.sharing = 0.0;
  spec.length = 2000;
  spec.hierarchies = 1;
  const SynthData zero = synthesize(spec);
  for (std::size_t i = 0; i < zero.signals.size(); ++i) {
    for (std::size_t j = i + 1; j < zero.signals.size(); ++j) {
      CHECK(std::fabs(correlation(zero.signals[i], zero.signals[j])) < 0.1);
    }
  }

  spec.sharing = 1.0;
  spec.noise = 0.0;
  spec.length = 100;
  const SynthData same = synthesize(spec);
  for (const auto& s : same.panel.series) CHECK(s.values == same.panel.series.front().values);

  const fs::path a = fresh_dir("synth_a");
  const fs::path b = fresh_dir("synth_b");
  SynthSpec seeded;
  seeded.seed = 77;
  cmd_synth(seeded, a);
  cmd_synth(seeded, b);
  CHECK(slurp(a / "sales.csv") == slurp(b / "sales.csv"));
  seeded.seed = 78;
  cmd_synth(seeded, b);
  CHECK(slurp(a / "sales.csv") != slurp(b / "sales.csv"));

  SynthSpec bad;
  bad.hierarchies = 0;
  CHECK_THROWS_AS(synthesize(bad), UserError);
  bad = SynthSpec{};
  bad.sharing = 1.5;
  CHECK_THROWS_AS(synthesize(bad), UserError);
}

TEST_CASE("config validation") {
  const fs::path dir = small_setup("validate");
  CHECK(validate_config(dir / "config.json").empty());

  nlohmann::json cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["lags"] = 0;
  write_json(dir / "lags.json", cfg);
  auto issues = validate_config(dir / "lags.json");
  REQUIRE_FALSE(issues.empty());
  CHECK(issues.front().field == "lags");

  cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["data"]["sales"] = "nope.csv";
  write_json(dir / "missing.json", cfg);
  issues = validate_config(dir / "missing.json");
  REQUIRE(issues.size() == 1);
  CHECK(issues.front().field == "data.sales");
  CHECK(issues.front().message.find("nope.csv") != std::string::npos);

  cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["models"] = nlohmann::json::array();
  cfg["holdout"] = -1;
  cfg["colour"] = "blue";
  write_json(dir / "many.json", cfg);
  CHECK(validate_config(dir / "many.json").size() >= 3);

  std::ofstream(dir / "broken.json") << "{\"lags\": ";
  CHECK(validate_config(dir / "broken.json").front().field == "<json>");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), UserError);
}

TEST_CASE("worker precedence") {
  RunConfig cfg;
  cfg.workers = 3;
  CliOverrides flags;
  ::unsetenv("HTSF_THREADS");
  CHECK(resolve_workers(cfg, flags) == 3);
  ::setenv("HTSF_THREADS", "2", 1);
  CHECK(resolve_workers(cfg, flags) == 2);
  flags.workers = 5;
  CHECK(resolve_workers(cfg, flags) == 5);
  flags.workers.reset();
  ::setenv("HTSF_THREADS", "zero", 1);
  CHECK_THROWS_AS(resolve_workers(cfg, flags), UserError);
  ::unsetenv("HTSF_THREADS");
  cfg.workers = 0;
  CHECK(resolve_workers(cfg, flags) >= 1);
}

TEST_CASE("run, rerun and report") {
  const fs::path dir = small_setup("run");
  CliOverrides first;
  first.output = dir / "a";
  first.workers = 1;
  const RunSummary a = cmd_run(dir / "config.json", first);
  CHECK(line_count(a.results_table) == 1 + 4);
  CHECK(a.results_table.find("nfg_GBDT-BU,") != std::string::npos);
  CHECK(slurp(dir / "a" / "results_table.csv") == a.results_table);
  CHECK(nlohmann::json::parse(slurp(dir / "a" / "status.json"))["complete"] == true);

  std::ifstream log(dir / "a" / "run.log");
  std::string line;
  std::size_t stages = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("stage"));
    CHECK(j.contains("wall_ms"));
    CHECK(j.contains("rows"));
    ++stages;
  }
  CHECK(stages > 5);

  CliOverrides second = first;
  second.output = dir / "b";
  second.workers = 3;
  cmd_run(dir / "config.json", second);
  for (const char* f : {"results_table.csv", "boxplot.csv", "mcb.csv", "forecasts/es.csv", "forecasts/gbdt-nfg.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  const std::string forecasts_before = slurp(dir / "a" / "forecasts" / "gbdt-nfg.csv");
  const std::string results = slurp(dir / "a" / "results_table.csv");
  const std::string mcb = slurp(dir / "a" / "mcb.csv");
  const std::string box = slurp(dir / "a" / "boxplot.csv");
  for (const char* f : {"results_table.csv", "mcb.csv", "boxplot.csv", "mcb.svg"}) fs::remove(dir / "a" / f);
  CHECK(cmd_report(dir / "a") == results);
  CHECK(slurp(dir / "a" / "results_table.csv") == results);
  CHECK(slurp(dir / "a" / "mcb.csv") == mcb);
  CHECK(slurp(dir / "a" / "boxplot.csv") == box);
  CHECK(fs::exists(dir / "a" / "mcb.svg"));
  CHECK(slurp(dir / "a" / "forecasts" / "gbdt-nfg.csv") == forecasts_before);

  fs::remove_all(dir / "b" / "forecasts");
  try {
    cmd_report(dir / "b");
    FAIL("report accepted an artifact without forecasts");
  } catch (const UserError& e) {
    CHECK(std::string(e.what()).find("incomplete artifact") != std::string::npos);
  }
}

TEST_CASE("two-model report and single global model") {
  const fs::path dir = small_setup("two");
  nlohmann::json cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["models"] = {"es", "gbdt-fg"};
  cfg["reconciliations"] = {"none"};
  write_json(dir / "config.json", cfg);
  const RunSummary s = cmd_run(dir / "config.json");
  const std::string mcb = slurp(s.artifact / "mcb.csv");
  CHECK(line_count(mcb) == 1 + 2);
  CHECK(fs::exists(s.artifact / "models" / "fg" / "global.json"));
  std::size_t fg_models = 0;
  for (const auto& e : fs::directory_iterator(s.artifact / "models" / "fg")) {
    (void)e;
    ++fg_models;
  }
  CHECK(fg_models == 1);
}

TEST_CASE("stage failures are tagged and flagged") {
  const fs::path dir = small_setup("fail");
  nlohmann::json cfg = nlohmann::json::parse(slurp(dir / "config.json"));
  cfg["lags"] = 100;  // longer than the series allow
  write_json(dir / "config.json", cfg);
  try {
    cmd_run(dir / "config.json");
    FAIL("run should fail");
  } catch (const UserError& e) {
    CHECK(std::string(e.what()).find("[embed]") != std::string::npos);
  }
  const auto status = nlohmann::json::parse(slurp(dir / "run" / "status.json"));
  CHECK(status["complete"] == false);
  CHECK(status["failed_stage"] == "embed");
}
