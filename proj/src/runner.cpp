#include "htsf/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "csv.hpp"
#include "htsf/error.hpp"
#include "htsf/evaluation.hpp"
#include "htsf/model_io.hpp"

namespace htsf {

namespace fs = std::filesystem;

namespace {

constexpr ModelFamily kFamilies[] = {ModelFamily::kEs, ModelFamily::kArima, ModelFamily::kGbdtLocal,
                                     ModelFamily::kGbdtPerHierarchy, ModelFamily::kGbdtGlobal};
constexpr ReconMethod kRecons[] = {ReconMethod::kNone, ReconMethod::kBottomUp, ReconMethod::kTopDown,
                                   ReconMethod::kMinT};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
  if (!out) throw UserError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
bool read_field(const nlohmann::json& doc, const char* key, T& out, std::vector<ConfigIssue>& issues) {
  if (!doc.contains(key)) return false;
  try {
    out = doc.at(key).get<T>();
    return true;
  } catch (const nlohmann::json::exception&) {
    issues.push_back({key, "wrong type"});
    return false;
  }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json models_json = nlohmann::json::array();
  for (ModelFamily f : models) models_json.push_back(std::string(family_config_name(f)));
  nlohmann::json recons_json = nlohmann::json::array();
  for (ReconMethod r : reconciliations) recons_json.push_back(std::string(recon_config_name(r)));
  nlohmann::json data = {{"sales", sales.string()}};
  if (m5_template) {
    data["hierarchy_template"] = "m5";
  } else {
    data["edges"] = edges.string();
    data["bottom_order"] = bottom_order.string();
  }
  return {{"data", data},
          {"lags", lags},
          {"holdout", holdout},
          {"models", models_json},
          {"reconciliations", recons_json},
          {"grid_search", grid_search},
          {"seed", seed},
          {"output", output.string()},
          {"workers", workers},
          {"gbdt", htsf::to_json(gbdt)},
          {"arima_order", {arima_order.p, arima_order.d, arima_order.q}},
          {"floor_at_zero", floor_at_zero},
          {"mcb_alpha", mcb_alpha}};
}

RunConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir, std::vector<ConfigIssue>& issues) {
  RunConfig cfg;
  if (!doc.is_object()) {
    issues.push_back({"<root>", "config must be a JSON object"});
    return cfg;
  }
  static const char* kKnown[] = {"data",    "lags",        "holdout",       "models",   "reconciliations",
                                 "grid_search", "seed",    "output",        "workers",  "gbdt",
                                 "arima_order", "floor_at_zero", "mcb_alpha"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      issues.push_back({key, "unknown field"});
    }
  }
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

  if (!doc.contains("data") || !doc["data"].is_object()) {
    issues.push_back({"data", "missing object with sales/edges/bottom_order paths"});
  } else {
    const auto& data = doc["data"];
    for (const auto& [key, value] : data.items()) {
      if (key != "sales" && key != "edges" && key != "bottom_order" && key != "hierarchy_template") {
        issues.push_back({"data." + key, "unknown field"});
      } else if (!value.is_string()) {
        issues.push_back({"data." + key, "must be a string"});
      }
    }
    if (data.contains("sales") && data["sales"].is_string()) {
      cfg.sales = resolve(data["sales"].get<std::string>());
    } else {
      issues.push_back({"data.sales", "missing sales CSV path"});
    }
    if (data.contains("hierarchy_template")) {
      if (data["hierarchy_template"] == "m5") {
        cfg.m5_template = true;
      } else {
        issues.push_back({"data.hierarchy_template", "only \"m5\" is supported"});
      }
    } else {
      for (const char* key : {"edges", "bottom_order"}) {
        if (data.contains(key) && data[key].is_string()) {
          (std::string(key) == "edges" ? cfg.edges : cfg.bottom_order) = resolve(data[key].get<std::string>());
        } else {
          issues.push_back({std::string("data.") + key, "missing path"});
        }
      }
    }
  }

  long long lags = static_cast<long long>(cfg.lags);
  if (read_field(doc, "lags", lags, issues) && lags < 1) issues.push_back({"lags", "must be >= 1"});
  cfg.lags = static_cast<std::size_t>(std::max(lags, 1LL));
  long long holdout = static_cast<long long>(cfg.holdout);
  if (read_field(doc, "holdout", holdout, issues) && holdout < 1) issues.push_back({"holdout", "must be >= 1"});
  cfg.holdout = static_cast<std::size_t>(std::max(holdout, 1LL));

  std::vector<std::string> names;
  if (read_field(doc, "models", names, issues)) {
    for (const auto& name : names) {
      try {
        const ModelFamily f = parse_family(name);
        if (std::find(cfg.models.begin(), cfg.models.end(), f) == cfg.models.end()) cfg.models.push_back(f);
      } catch (const UserError& e) {
        issues.push_back({"models", e.what()});
      }
    }
  }
  if (cfg.models.empty()) issues.push_back({"models", "must name at least one model family"});

  names.clear();
  if (read_field(doc, "reconciliations", names, issues)) {
    for (const auto& name : names) {
      try {
        const ReconMethod r = parse_recon(name);
        if (std::find(cfg.reconciliations.begin(), cfg.reconciliations.end(), r) == cfg.reconciliations.end()) {
          cfg.reconciliations.push_back(r);
        }
      } catch (const UserError& e) {
        issues.push_back({"reconciliations", e.what()});
      }
    }
  }

  read_field(doc, "grid_search", cfg.grid_search, issues);
  read_field(doc, "seed", cfg.seed, issues);
  std::string output;
  if (read_field(doc, "output", output, issues)) cfg.output = resolve(output);
  else cfg.output = resolve(cfg.output.string());
  long long workers = 0;
  if (read_field(doc, "workers", workers, issues) && workers < 0) issues.push_back({"workers", "must be >= 0"});
  cfg.workers = static_cast<std::size_t>(std::max(workers, 0LL));

  if (doc.contains("gbdt")) {
    try {
      cfg.gbdt = gbdt_params_from_json(doc["gbdt"]);
      cfg.gbdt.validate();
    } catch (const UserError& e) {
      issues.push_back({"gbdt", e.what()});
    }
  }
  std::vector<int> order;
  if (read_field(doc, "arima_order", order, issues)) {
    if (order.size() != 3 || order[0] < 0 || order[1] < 0 || order[2] < 0) {
      issues.push_back({"arima_order", "must be [p, d, q] with non-negative entries"});
    } else {
      cfg.arima_order = {order[0], order[1], order[2]};
    }
  }
  read_field(doc, "floor_at_zero", cfg.floor_at_zero, issues);
  if (read_field(doc, "mcb_alpha", cfg.mcb_alpha, issues)) {
    try {
      studentized_range_q(cfg.mcb_alpha, 2);
    } catch (const UserError& e) {
      issues.push_back({"mcb_alpha", e.what()});
    }
  }
  return cfg;
}

namespace {

nlohmann::json parse_json_file(const fs::path& path, std::vector<ConfigIssue>& issues) {
  std::ifstream in(path);
  if (!in) {
    issues.push_back({"<file>", "cannot open config " + path.string()});
    return nullptr;
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    issues.push_back({"<json>", e.what()});
    return nullptr;
  }
}

std::string format_issues(const std::vector<ConfigIssue>& issues) {
  std::string msg = "invalid config:";
  for (const auto& i : issues) msg += "\n  " + i.field + ": " + i.message;
  return msg;
}

Hierarchy load_hierarchy(const RunConfig& cfg) {
  if (cfg.m5_template) return Hierarchy::m5_store_template();
  return Hierarchy::build(load_edges_csv(cfg.edges), load_bottom_order(cfg.bottom_order));
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  std::vector<ConfigIssue> issues;
  const nlohmann::json doc = parse_json_file(path, issues);
  RunConfig cfg;
  if (issues.empty()) cfg = parse_config(doc, fs::absolute(path).parent_path(), issues);
  if (!issues.empty()) throw UserError(format_issues(issues));
  return cfg;
}

std::vector<ConfigIssue> validate_config(const fs::path& path) {
  std::vector<ConfigIssue> issues;
  const nlohmann::json doc = parse_json_file(path, issues);
  if (!issues.empty()) return issues;
  const RunConfig cfg = parse_config(doc, fs::absolute(path).parent_path(), issues);

  bool files_ok = true;
  auto check_file = [&](const char* field, const fs::path& p) {
    if (p.empty()) return;
    if (!fs::is_regular_file(p)) {
      issues.push_back({field, "file not found: " + p.string()});
      files_ok = false;
    }
  };
  check_file("data.sales", cfg.sales);
  if (!cfg.m5_template) {
    check_file("data.edges", cfg.edges);
    check_file("data.bottom_order", cfg.bottom_order);
  }
  if (!issues.empty() || !files_ok) return issues;

  std::optional<Hierarchy> hierarchy;
  try {
    hierarchy = load_hierarchy(cfg);
  } catch (const UserError& e) {
    issues.push_back({"data.edges", e.what()});
  }
  std::optional<SalesPanel> panel;
  try {
    panel = load_sales_csv(cfg.sales);
  } catch (const UserError& e) {
    issues.push_back({"data.sales", e.what()});
  }
  if (!hierarchy || !panel) return issues;
  try {
    const auto frames = to_hierarchy_series(*panel, *hierarchy);
    const std::size_t T = frames.front().values.size();
    const std::size_t need = cfg.lags + 2 + cfg.holdout + (cfg.grid_search ? 2 * cfg.holdout : 1);
    if (T < need) {
      issues.push_back({"lags", "series length " + std::to_string(T) + " too short for lags=" +
                                    std::to_string(cfg.lags) + ", holdout=" + std::to_string(cfg.holdout) +
                                    (cfg.grid_search ? " with grid search" : "") + " (need " + std::to_string(need) +
                                    ")"});
    }
    for (const auto& f : frames) {
      if (f.values.size() != T) {
        issues.push_back({"data.sales", "hierarchy " + f.hierarchy_id + " has a different series length"});
        break;
      }
    }
  } catch (const UserError& e) {
    issues.push_back({"data.sales", e.what()});
  }
  return issues;
}

std::size_t resolve_workers(const RunConfig& config, const CliOverrides& overrides) {
  if (overrides.workers && *overrides.workers > 0) return *overrides.workers;
  if (const char* env = std::getenv("HTSF_THREADS"); env != nullptr && *env != '\0') {
    const auto parsed = detail::parse_int(env);
    if (!parsed || *parsed < 1) throw UserError("HTSF_THREADS must be a positive integer");
    return static_cast<std::size_t>(*parsed);
  }
  if (config.workers > 0) return config.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

class RunLog {
 public:
  explicit RunLog(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw UserError("cannot write " + path.string());
  }

  template <typename F>
  auto stage(const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    current_ = name;
    std::size_t rows = 0;
    try {
      if constexpr (std::is_void_v<decltype(body(rows))>) {
        body(rows);
        record(name, start, rows);
      } else {
        auto result = body(rows);
        record(name, start, rows);
        return result;
      }
    } catch (const UserError& e) {
      throw UserError("[" + name + "] " + e.what());
    } catch (const InternalError& e) {
      throw InternalError("[" + name + "] " + e.what());
    } catch (const std::exception& e) {
      throw InternalError("[" + name + "] " + e.what());
    }
  }

  const std::string& current() const { return current_; }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start, std::size_t rows) {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    out_ << nlohmann::json{{"stage", name}, {"wall_ms", ms}, {"rows", rows}}.dump() << '\n';
    out_.flush();
  }

  std::ofstream out_;
  std::string current_;
};

void write_status(const fs::path& dir, bool complete, const std::string& failed_stage = {}) {
  nlohmann::json status = {{"complete", complete}};
  if (!failed_stage.empty()) status["failed_stage"] = failed_stage;
  write_text(dir / "status.json", status.dump(2) + "\n");
}

std::string forecast_csv(const std::vector<ForecastSet>& sets) {
  std::ostringstream out;
  out << "hierarchy_id,node_id,step,model,reconciliation,forecast,actual\n";
  for (const ForecastSet& set : sets) {
    for (const SeriesForecast& s : set.series) {
      for (std::size_t i = 0; i < s.forecast.size(); ++i) {
        out << s.hierarchy_id << ',' << s.node_id << ',' << (i + 1) << ',' << family_tag(set.family) << ','
            << recon_tag(set.recon) << ',' << detail::format_double(s.forecast[i]) << ','
            << detail::format_double(s.actual[i]) << '\n';
      }
    }
  }
  return out.str();
}

struct SeriesScale {
  std::string hierarchy_id;
  std::string node_id;
  EvalLevel level = EvalLevel::kBottom;
  std::optional<double> scale;
};

std::string scales_csv(const Dataset& data) {
  std::ostringstream out;
  out << "hierarchy_id,node_id,level,scale\n";
  for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
    for (std::size_t v = 0; v < data.hierarchy.n_total(); ++v) {
      const auto scale = naive_scale(data.training_values(h, v));
      out << data.hierarchies[h].id << ',' << data.hierarchy.node(v) << ','
          << eval_level_name(eval_level(data.hierarchy, v)) << ','
          << (scale ? detail::format_double(*scale) : std::string("NA")) << '\n';
    }
  }
  return out.str();
}

EvalLevel parse_level(const std::string& s) {
  for (EvalLevel l : {EvalLevel::kTop, EvalLevel::kMiddle, EvalLevel::kBottom}) {
    if (s == eval_level_name(l)) return l;
  }
  throw UserError("scales.csv: unknown level '" + s + "'");
}

struct Variant {
  ModelFamily family;
  ReconMethod recon;
  // Indexed like the scales list; forecast/actual per step.
  std::vector<std::vector<double>> forecast;
  std::vector<std::vector<double>> actual;
};

// Recomputes every evaluation output of an artifact from its forecasts and
// scales. Returns the results table text.
std::string evaluate_artifact(const fs::path& dir, double mcb_alpha) {
  std::vector<SeriesScale> scales;
  std::map<std::pair<std::string, std::string>, std::size_t> series_index;
  {
    detail::CsvReader reader(dir / "scales.csv", {"hierarchy_id", "node_id", "level", "scale"});
    while (auto row = reader.next()) {
      SeriesScale s{(*row)[0], (*row)[1], parse_level((*row)[2]), std::nullopt};
      if ((*row)[3] != "NA") {
        const auto v = detail::parse_double((*row)[3]);
        if (!v) throw UserError(reader.location() + ": bad scale");
        s.scale = *v;
      }
      series_index.emplace(std::make_pair(s.hierarchy_id, s.node_id), scales.size());
      scales.push_back(std::move(s));
    }
  }

  std::vector<Variant> variants;
  for (ModelFamily family : kFamilies) {
    const fs::path file = dir / "forecasts" / (std::string(family_config_name(family)) + ".csv");
    if (!fs::exists(file)) continue;
    std::map<ReconMethod, Variant> by_recon;
    detail::CsvReader reader(file, {"hierarchy_id", "node_id", "step", "model", "reconciliation", "forecast", "actual"});
    while (auto row = reader.next()) {
      const auto& f = *row;
      if (parse_family(f[3]) != family) throw UserError(reader.location() + ": model tag does not match file");
      const ReconMethod recon = parse_recon(f[4]);
      auto it = series_index.find({f[0], f[1]});
      if (it == series_index.end()) throw UserError(reader.location() + ": series missing from scales.csv");
      const auto step = detail::parse_int(f[2]);
      const auto fc = detail::parse_double(f[5]);
      const auto ac = detail::parse_double(f[6]);
      if (!step || *step < 1 || !fc || !ac) throw UserError(reader.location() + ": malformed forecast row");
      auto [vit, inserted] = by_recon.try_emplace(recon, Variant{family, recon, {}, {}});
      Variant& v = vit->second;
      if (inserted) {
        v.forecast.resize(scales.size());
        v.actual.resize(scales.size());
      }
      auto& fv = v.forecast[it->second];
      auto& av = v.actual[it->second];
      const auto idx = static_cast<std::size_t>(*step - 1);
      if (fv.size() <= idx) {
        fv.resize(idx + 1, std::nan(""));
        av.resize(idx + 1, std::nan(""));
      }
      fv[idx] = *fc;
      av[idx] = *ac;
    }
    for (ReconMethod r : kRecons) {
      if (auto it = by_recon.find(r); it != by_recon.end()) variants.push_back(std::move(it->second));
    }
  }
  if (variants.empty()) throw UserError("incomplete artifact: no forecasts in " + dir.string());

  std::vector<ResultsRow> rows;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> mcb_rows(scales.size(), std::vector<double>(variants.size(), std::nan("")));
  std::ostringstream boxplot;
  boxplot << "model,level,min,q1,median,q3,max\n";
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const Variant& v = variants[k];
    std::vector<MaseScore> scores;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      if (v.forecast[i].empty()) {
        throw UserError("incomplete artifact: no " + model_label(v.family, v.recon) + " forecasts for series (" +
                        scales[i].hierarchy_id + ", " + scales[i].node_id + ")");
      }
      for (double x : v.forecast[i]) {
        if (std::isnan(x)) throw UserError("incomplete artifact: missing forecast step");
      }
      MaseScore s{scales[i].hierarchy_id, scales[i].node_id, scales[i].level,
                  mase_scaled(scales[i].scale, v.actual[i], v.forecast[i])};
      if (s.value) mcb_rows[i][k] = *s.value;
      scores.push_back(std::move(s));
    }
    ResultsRow row;
    row.model = model_label(v.family, v.recon);
    row.levels = level_means(scores);
    row.undefined = undefined_count(scores);
    if (row.undefined < scores.size()) {
      row.avg_levels = avg_levels(scores);
      row.avg_products = avg_products(scores);
    }
    rows.push_back(row);
    labels.push_back(row.model);

    for (EvalLevel level : {EvalLevel::kTop, EvalLevel::kMiddle, EvalLevel::kBottom}) {
      std::vector<double> values;
      for (const auto& s : scores) {
        if (s.level == level && s.value) values.push_back(*s.value);
      }
      if (values.empty()) continue;
      const DistributionStats d = distribution_stats(values);
      boxplot << row.model << ',' << eval_level_name(level) << ',' << detail::format_double(d.min) << ','
              << detail::format_double(d.q1) << ',' << detail::format_double(d.median) << ','
              << detail::format_double(d.q3) << ',' << detail::format_double(d.max) << '\n';
    }
  }

  const std::string table = render_results_table(rows);
  write_text(dir / "results_table.csv", table);
  write_text(dir / "boxplot.csv", boxplot.str());
  if (labels.size() >= 2) {
    const McbResult mcb = mcb_test(mcb_rows, labels, mcb_alpha);
    write_text(dir / "mcb.csv", render_mcb_csv(mcb));
    write_text(dir / "mcb.svg", render_mcb_svg(mcb));
  } else {
    write_text(dir / "mcb.csv", "model,mean_rank,lo,hi,significant_vs_best\n");
    fs::remove(dir / "mcb.svg");
  }
  return table;
}

}  // namespace

RunSummary run_pipeline(RunConfig config, std::size_t workers) {
  const fs::path dir = config.output;
  fs::create_directories(dir);
  for (const char* stale : {"results_table.csv", "mcb.csv", "boxplot.csv", "mcb.svg", "scales.csv"}) {
    fs::remove(dir / stale);
  }
  fs::remove_all(dir / "forecasts");
  fs::remove_all(dir / "models");
  write_status(dir, false);
  write_text(dir / "config.json", config.to_json().dump(2) + "\n");

  RunLog log(dir / "run.log");
  RunSummary summary;
  summary.artifact = dir;
  try {
    const Hierarchy hierarchy = log.stage("load", [&](std::size_t&) {
      return load_hierarchy(config);
    });
    const SalesPanel panel = log.stage("ingest", [&](std::size_t& rows) {
      SalesPanel p = load_sales_csv(config.sales);
      rows = p.record_count();
      return p;
    });
    const Dataset data = log.stage("embed", [&](std::size_t& rows) {
      Dataset d = build_dataset(panel, hierarchy, config.lags, config.holdout, workers);
      for (const auto& hd : d.hierarchies) {
        for (const auto& em : hd.embeddings) rows += em.rows();
      }
      if (config.grid_search && d.hierarchies.front().split.train_rows < 2 * config.holdout) {
        throw UserError("grid search needs at least " + std::to_string(2 * config.holdout) + " training rows");
      }
      return d;
    });
    log.stage("scales", [&](std::size_t& rows) {
      write_text(dir / "scales.csv", scales_csv(data));
      rows = data.series_count();
    });

    ForecastOptions options;
    options.gbdt = config.gbdt;
    options.grid_search = config.grid_search;
    options.arima_order = config.arima_order;
    options.seed = config.seed;
    options.workers = workers;

    for (ModelFamily family : kFamilies) {
      if (std::find(config.models.begin(), config.models.end(), family) == config.models.end()) continue;
      const std::string tag(family_tag(family));
      BaseForecastResult base = log.stage("forecast:" + tag, [&](std::size_t& rows) {
        BaseForecastResult r = produce_base_forecasts(family, data, options);
        rows = r.training_rows;
        return r;
      });
      log.stage("persist:" + tag, [&](std::size_t& rows) {
        for (const auto& m : base.models) write_text(dir / m.relative_path, m.document.dump() + "\n");
        rows = base.models.size();
        summary.models_persisted += base.models.size();
      });
      std::vector<ForecastSet> sets = log.stage("reconcile:" + tag, [&](std::size_t& rows) {
        std::vector<ForecastSet> out;
        for (ReconMethod recon : kRecons) {
          if (std::find(config.reconciliations.begin(), config.reconciliations.end(), recon) ==
              config.reconciliations.end()) {
            continue;
          }
          ReconcileOutcome r = reconcile_forecasts(base.forecasts, data, recon, config.floor_at_zero);
          rows += r.forecasts.series.size() * data.holdout;
          out.push_back(std::move(r.forecasts));
        }
        return out;
      });
      log.stage("write:" + tag, [&](std::size_t& rows) {
        write_text(dir / "forecasts" / (std::string(family_config_name(family)) + ".csv"), forecast_csv(sets));
        rows = sets.size() * data.series_count() * data.holdout;
      });
    }

    summary.results_table = log.stage("evaluate", [&](std::size_t& rows) {
      rows = data.series_count();
      return evaluate_artifact(dir, config.mcb_alpha);
    });
  } catch (...) {
    write_status(dir, false, log.current());
    throw;
  }
  write_status(dir, true);
  return summary;
}

RunSummary cmd_run(const fs::path& config_path, const CliOverrides& overrides) {
  RunConfig cfg = load_config(config_path);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.output) cfg.output = fs::absolute(*overrides.output);
  const std::size_t workers = resolve_workers(cfg, overrides);
  return run_pipeline(std::move(cfg), workers);
}

std::string cmd_report(const fs::path& artifact_dir) {
  const fs::path status_path = artifact_dir / "status.json";
  if (!fs::exists(status_path) || !fs::exists(artifact_dir / "scales.csv") ||
      !fs::is_directory(artifact_dir / "forecasts") || fs::is_empty(artifact_dir / "forecasts")) {
    throw UserError("incomplete artifact: " + artifact_dir.string());
  }
  nlohmann::json status;
  try {
    status = nlohmann::json::parse(read_text(status_path));
  } catch (const nlohmann::json::exception&) {
    throw UserError("incomplete artifact: unreadable status.json");
  }
  if (!status.value("complete", false)) throw UserError("incomplete artifact: run did not finish");
  double alpha = 0.05;
  if (fs::exists(artifact_dir / "config.json")) {
    try {
      alpha = nlohmann::json::parse(read_text(artifact_dir / "config.json")).value("mcb_alpha", 0.05);
    } catch (const nlohmann::json::exception&) {
      throw UserError("incomplete artifact: unreadable config.json");
    }
  }
  return evaluate_artifact(artifact_dir, alpha);
}

SynthData synthesize(const SynthSpec& spec) {
  if (spec.hierarchies < 1 || spec.bottoms < 1 || spec.length < 2) {
    throw UserError("synth: hierarchies, bottoms and length must be positive (length >= 2)");
  }
  if (!(spec.sharing >= 0.0 && spec.sharing <= 1.0)) throw UserError("synth: sharing must lie in [0, 1]");
  if (!(spec.noise >= 0.0)) throw UserError("synth: noise must be >= 0");
  if (!(spec.level > 0.0)) throw UserError("synth: level must be > 0");
  if (!(std::fabs(spec.ar_coefficient) < 1.0)) throw UserError("synth: AR coefficient must satisfy |phi| < 1");

  SynthData out;
  if (spec.m5_tree) {
    out.hierarchy = Hierarchy::m5_store_template();
  } else {
    if (spec.groups > spec.bottoms) throw UserError("synth: groups must not exceed bottoms");
    std::vector<Edge> edges;
    std::vector<std::string> bottoms;
    for (std::size_t b = 0; b < spec.bottoms; ++b) bottoms.push_back("S" + std::to_string(b + 1));
    if (spec.groups == 0) {
      for (const auto& b : bottoms) edges.push_back({"Total", b});
    } else {
      for (std::size_t g = 0; g < spec.groups; ++g) edges.push_back({"Total", "G" + std::to_string(g + 1)});
      std::size_t next = 0;
      for (std::size_t g = 0; g < spec.groups; ++g) {
        const std::size_t size = spec.bottoms / spec.groups + (g < spec.bottoms % spec.groups ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) edges.push_back({"G" + std::to_string(g + 1), bottoms[next++]});
      }
    }
    if (spec.bottoms == 1 && spec.groups == 0) edges.clear();
    out.hierarchy = Hierarchy::build(edges, bottoms);
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = spec.ar_coefficient;
  const double innovation = std::sqrt(1.0 - phi * phi);
  auto ar1 = [&] {
    std::vector<double> x(spec.length);
    x[0] = normal(rng);
    for (std::size_t t = 1; t < spec.length; ++t) x[t] = phi * x[t - 1] + innovation * normal(rng);
    return x;
  };

  const std::vector<double> common = ar1();
  const double w_common = std::sqrt(spec.sharing);
  const double w_own = std::sqrt(1.0 - spec.sharing);
  const std::vector<std::string> bottom_ids = out.hierarchy.bottom_order();
  const std::size_t width = std::to_string(spec.hierarchies).size();
  for (std::size_t h = 0; h < spec.hierarchies; ++h) {
    std::string hid = std::to_string(h + 1);
    hid = "H" + std::string(width - hid.size(), '0') + hid;
    for (const std::string& node : bottom_ids) {
      const std::vector<double> own = ar1();
      BottomSeries s{hid, node, std::vector<double>(spec.length)};
      std::vector<double> z(spec.length);
      for (std::size_t t = 0; t < spec.length; ++t) {
        z[t] = w_common * common[t] + w_own * own[t];
        const double eta = normal(rng);
        s.values[t] = spec.level * std::exp(0.5 * z[t] + spec.noise * eta);
      }
      out.panel.series.push_back(std::move(s));
      out.signals.push_back(std::move(z));
    }
  }
  // Panel order is lexicographic by (hierarchy, node), like a loaded file.
  std::vector<std::size_t> order(out.panel.series.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = out.panel.series[a];
    const auto& sb = out.panel.series[b];
    return std::tie(sa.hierarchy_id, sa.node_id) < std::tie(sb.hierarchy_id, sb.node_id);
  });
  SynthData sorted{out.hierarchy, {}, {}};
  for (std::size_t i : order) {
    sorted.panel.series.push_back(std::move(out.panel.series[i]));
    sorted.signals.push_back(std::move(out.signals[i]));
  }
  return sorted;
}

void cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  const SynthData data = synthesize(spec);
  fs::create_directories(out_dir);
  write_sales_csv(out_dir / "sales.csv", data.panel);
  write_edges_csv(out_dir / "edges.csv", data.hierarchy.edges());
  write_bottom_order(out_dir / "bottom_order.txt", data.hierarchy.bottom_order());

  const std::size_t holdout = 28;
  const std::size_t lags = spec.length > 120 ? std::min<std::size_t>(60, spec.length - 120) : 1;
  const nlohmann::json config = {
      {"data", {{"sales", "sales.csv"}, {"edges", "edges.csv"}, {"bottom_order", "bottom_order.txt"}}},
      {"lags", std::max<std::size_t>(lags, 1)},
      {"holdout", holdout},
      {"models", {"es", "arima", "gbdt-local", "gbdt-nfg", "gbdt-fg"}},
      {"reconciliations", {"none", "bu", "td", "mint"}},
      {"grid_search", false},
      {"seed", spec.seed},
      {"output", "run"}};
  write_text(out_dir / "config.json", config.dump(2) + "\n");
}

}  // namespace htsf
