#include "htsf/scope.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "htsf/error.hpp"
#include "htsf/evaluation.hpp"
#include "htsf/model_io.hpp"
#include "htsf/ses.hpp"
#include "parallel.hpp"

namespace htsf {

std::string_view family_tag(ModelFamily family) {
  switch (family) {
    case ModelFamily::kEs:
      return "ES";
    case ModelFamily::kArima:
      return "ARIMA";
    case ModelFamily::kGbdtLocal:
      return "loc";
    case ModelFamily::kGbdtPerHierarchy:
      return "nfg";
    case ModelFamily::kGbdtGlobal:
      return "fg";
  }
  return "ES";
}

std::string_view family_config_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kEs:
      return "es";
    case ModelFamily::kArima:
      return "arima";
    case ModelFamily::kGbdtLocal:
      return "gbdt-local";
    case ModelFamily::kGbdtPerHierarchy:
      return "gbdt-nfg";
    case ModelFamily::kGbdtGlobal:
      return "gbdt-fg";
  }
  return "es";
}

ModelFamily parse_family(std::string_view text) {
  for (ModelFamily f : {ModelFamily::kEs, ModelFamily::kArima, ModelFamily::kGbdtLocal,
                        ModelFamily::kGbdtPerHierarchy, ModelFamily::kGbdtGlobal}) {
    if (text == family_tag(f) || text == family_config_name(f)) return f;
  }
  throw UserError("unknown model family '" + std::string(text) + "'");
}

std::string model_label(ModelFamily family, ReconMethod recon) {
  std::string label(family_tag(family));
  if (family != ModelFamily::kEs && family != ModelFamily::kArima) label += "_GBDT";
  if (recon != ReconMethod::kNone) label += "-" + std::string(recon_tag(recon));
  return label;
}

std::size_t Dataset::series_length() const {
  if (hierarchies.empty()) return 0;
  return hierarchies.front().frames.front().values.size();
}

std::span<const double> Dataset::training_values(std::size_t h, std::size_t node) const {
  const auto& values = hierarchies[h].frames[node].values;
  return {values.data(), values.size() - holdout};
}

Dataset build_dataset(const SalesPanel& panel, const Hierarchy& hierarchy, std::size_t lags, std::size_t holdout,
                      std::size_t workers) {
  if (lags < 1) throw UserError("lags must be >= 1");
  if (holdout < 1) throw UserError("holdout must be >= 1");
  Dataset data;
  data.hierarchy = hierarchy;
  data.s = summing_matrix(hierarchy);
  data.lags = lags;
  data.holdout = holdout;

  std::vector<SeriesFrame> frames = to_hierarchy_series(panel, hierarchy);
  const std::size_t n = hierarchy.n_total();
  for (std::size_t i = 0; i < frames.size(); i += n) {
    HierarchyData hd;
    hd.id = frames[i].hierarchy_id;
    for (std::size_t v = 0; v < n; ++v) hd.frames.push_back(std::move(frames[i + v]));
    hd.embeddings.resize(n);
    data.hierarchies.push_back(std::move(hd));
  }

  detail::parallel_for(data.series_count(), workers, [&](std::size_t k) {
    HierarchyData& hd = data.hierarchies[k / n];
    hd.embeddings[k % n] = build_embedding(hd.frames[k % n], lags, data.horizon);
  });
  std::size_t expected_rows = 0;
  for (auto& hd : data.hierarchies) {
    hd.split = split_holdout(hd.embeddings.front(), holdout);
    if (expected_rows == 0) expected_rows = hd.embeddings.front().rows();
    if (hd.embeddings.front().rows() != expected_rows) {
      throw UserError("all hierarchies must share the same series length (hierarchy " + hd.id + " differs)");
    }
  }
  return data;
}

std::vector<SeriesRef> series_in_scope(const Dataset& data, Scope scope, std::size_t hierarchy, std::size_t node) {
  const std::size_t n = data.hierarchy.n_total();
  std::vector<SeriesRef> out;
  switch (scope) {
    case Scope::kLocal:
      if (hierarchy >= data.hierarchies.size() || node >= n) throw UserError("scope: unknown series target");
      out.push_back({hierarchy, node});
      break;
    case Scope::kPerHierarchy:
      if (hierarchy >= data.hierarchies.size()) throw UserError("scope: unknown hierarchy target");
      for (std::size_t v = 0; v < n; ++v) out.push_back({hierarchy, v});
      break;
    case Scope::kGlobal:
      for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
        for (std::size_t v = 0; v < n; ++v) out.push_back({h, v});
      }
      break;
  }
  return out;
}

TrainingMatrix assemble_training_matrix(const Dataset& data, std::span<const SeriesRef> series,
                                        std::size_t drop_tail) {
  TrainingMatrix tm;
  const std::size_t features = data.lags + 1;
  std::size_t total = 0;
  for (const SeriesRef& ref : series) {
    const std::size_t rows = data.hierarchies[ref.hierarchy].split.train_rows;
    if (rows > drop_tail) total += rows - drop_tail;
  }
  if (total == 0) throw UserError("training matrix is empty");

  std::vector<double> x;
  x.reserve(total * features);
  tm.y.reserve(total);
  tm.provenance.reserve(total);
  const std::size_t target_offset = data.lags + data.horizon + 1;
  for (const SeriesRef& ref : series) {
    const HierarchyData& hd = data.hierarchies[ref.hierarchy];
    const EmbeddingMatrix& em = hd.embeddings[ref.node];
    const std::size_t rows = hd.split.train_rows > drop_tail ? hd.split.train_rows - drop_tail : 0;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto f = em.features(r);
      x.insert(x.end(), f.begin(), f.end());
      tm.y.push_back(em.target(r));
      tm.provenance.push_back({static_cast<std::uint32_t>(ref.hierarchy), static_cast<std::uint32_t>(ref.node),
                               static_cast<std::uint32_t>(r + target_offset)});
    }
  }
  tm.x = FeatureMatrix(total, features, std::move(x));
  return tm;
}

TrainingMatrix assemble_training_matrix(const Dataset& data, Scope scope, std::size_t hierarchy, std::size_t node) {
  const std::vector<SeriesRef> refs = series_in_scope(data, scope, hierarchy, node);
  return assemble_training_matrix(data, refs);
}

std::uint64_t stable_hash(std::string_view key) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t task_seed(std::uint64_t seed, std::string_view task_key) { return seed ^ stable_hash(task_key); }

namespace {

// Feature rows [first, first + count) of one series.
FeatureMatrix rows_of(const EmbeddingMatrix& em, std::size_t first, std::size_t count) {
  std::vector<double> x;
  x.reserve(count * em.feature_count());
  for (std::size_t r = first; r < first + count; ++r) {
    const auto f = em.features(r);
    x.insert(x.end(), f.begin(), f.end());
  }
  return FeatureMatrix(count, em.feature_count(), std::move(x));
}

GridResult run_grid(const Dataset& data, std::span<const SeriesRef> series, const HyperGrid& grid,
                    const GbdtParams& base, std::size_t workers, std::size_t validation) {
  for (const SeriesRef& ref : series) {
    if (data.hierarchies[ref.hierarchy].split.train_rows < 2 * validation) {
      throw UserError("grid search: need at least " + std::to_string(2 * validation) +
                      " training rows per series for the validation window");
    }
  }
  const TrainingMatrix tm = assemble_training_matrix(data, series, validation);

  GridResult result;
  result.best = base;
  double best_score = std::numeric_limits<double>::infinity();
  bool first = true;
  for (double lr : grid.learning_rates) {
    for (double ff : grid.feature_fractions) {
      GbdtParams params = base;
      params.learning_rate = lr;
      params.feature_fraction = ff;
      const GbdtModel model = gbdt_train(tm.x, tm.y, params, workers);

      double sum = 0.0;
      std::size_t defined = 0;
      for (const SeriesRef& ref : series) {
        const HierarchyData& hd = data.hierarchies[ref.hierarchy];
        const EmbeddingMatrix& em = hd.embeddings[ref.node];
        const std::size_t first_val = hd.split.train_rows - validation;
        const std::vector<double> pred = gbdt_predict(model, rows_of(em, first_val, validation));
        std::vector<double> actual(validation);
        for (std::size_t i = 0; i < validation; ++i) actual[i] = em.target(first_val + i);
        const auto train = data.training_values(ref.hierarchy, ref.node);
        const auto score = mase(train.first(train.size() - validation), actual, pred);
        if (score) {
          sum += *score;
          ++defined;
        }
      }
      const double mean = defined > 0 ? sum / static_cast<double>(defined) : std::numeric_limits<double>::infinity();
      result.evaluated.push_back({lr, ff, mean});
      if (first || mean < best_score) {
        best_score = mean;
        result.best = params;
        first = false;
      }
    }
  }
  return result;
}

}  // namespace

GridResult grid_search(const Dataset& data, std::span<const SeriesRef> series, const HyperGrid& grid,
                       const GbdtParams& base, std::size_t workers, std::size_t validation) {
  if (grid.size() == 0) throw UserError("grid search: empty grid");
  return run_grid(data, series, grid, base, workers, validation);
}

namespace {

struct GbdtTask {
  std::string key;
  std::string path;
  std::vector<SeriesRef> series;
};

std::vector<GbdtTask> gbdt_tasks(ModelFamily family, const Dataset& data) {
  std::vector<GbdtTask> tasks;
  const std::size_t n = data.hierarchy.n_total();
  switch (family) {
    case ModelFamily::kGbdtLocal:
      for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
        for (std::size_t v = 0; v < n; ++v) {
          tasks.push_back({"loc/" + data.hierarchies[h].id + "/" + data.hierarchies[h].frames[v].node_id,
                           "models/loc/" + std::to_string(h) + "_" + std::to_string(v) + ".json",
                           series_in_scope(data, Scope::kLocal, h, v)});
        }
      }
      break;
    case ModelFamily::kGbdtPerHierarchy:
      for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
        tasks.push_back({"nfg/" + data.hierarchies[h].id, "models/nfg/" + std::to_string(h) + ".json",
                         series_in_scope(data, Scope::kPerHierarchy, h)});
      }
      break;
    case ModelFamily::kGbdtGlobal:
      tasks.push_back({"fg", "models/fg/global.json", series_in_scope(data, Scope::kGlobal)});
      break;
    default:
      throw InternalError("gbdt_tasks: not a GBDT family");
  }
  return tasks;
}

void init_forecast_set(ForecastSet& set, const Dataset& data) {
  const std::size_t n = data.hierarchy.n_total();
  for (const HierarchyData& hd : data.hierarchies) {
    for (std::size_t v = 0; v < n; ++v) {
      SeriesForecast sf{hd.id, hd.frames[v].node_id, std::vector<double>(data.holdout),
                        std::vector<double>(data.holdout)};
      const EmbeddingMatrix& em = hd.embeddings[v];
      for (std::size_t i = 0; i < data.holdout; ++i) sf.actual[i] = em.target(hd.split.train_rows + i);
      set.series.push_back(std::move(sf));
    }
  }
}

}  // namespace

BaseForecastResult produce_base_forecasts(ModelFamily family, const Dataset& data, const ForecastOptions& options) {
  BaseForecastResult result;
  result.forecasts.family = family;
  init_forecast_set(result.forecasts, data);
  const std::size_t n = data.hierarchy.n_total();
  const std::size_t holdout = data.holdout;

  if (family == ModelFamily::kEs || family == ModelFamily::kArima) {
    // One model per test row, fitted on that row's own window.
    std::vector<nlohmann::json> docs(data.series_count());
    std::vector<std::size_t> fallbacks(data.series_count(), 0);
    detail::parallel_for(data.series_count(), options.workers, [&](std::size_t k) {
      const HierarchyData& hd = data.hierarchies[k / n];
      const EmbeddingMatrix& em = hd.embeddings[k % n];
      SeriesForecast& out = result.forecasts.series[k];
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < holdout; ++i) {
        const auto window = em.features(hd.split.train_rows + i);
        nlohmann::json doc;
        if (family == ModelFamily::kEs) {
          const SesParams p = ses_fit(window);
          out.forecast[i] = ses_forecast(window, p.alpha);
          doc = to_json(p);
        } else {
          try {
            const ArimaModel m = arima_fit(window, options.arima_order);
            out.forecast[i] = arima_forecast(m, window);
            doc = to_json(m);
          } catch (const UserError&) {
            out.forecast[i] = window.back();
            doc = nullptr;
            ++fallbacks[k];
          }
          if (!std::isfinite(out.forecast[i])) {
            out.forecast[i] = window.back();
            doc = nullptr;
            ++fallbacks[k];
          }
        }
        rows.push_back({{"step", i + 1}, {"model", std::move(doc)}});
      }
      docs[k] = {{"hierarchy_id", hd.id}, {"node_id", out.node_id}, {"rows", std::move(rows)}};
    });
    const std::string dir = family == ModelFamily::kEs ? "models/es/" : "models/arima/";
    for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
      nlohmann::json series = nlohmann::json::array();
      for (std::size_t v = 0; v < n; ++v) series.push_back(std::move(docs[h * n + v]));
      result.models.push_back({dir + std::to_string(h) + ".json", {{"series", std::move(series)}}});
    }
    for (std::size_t f : fallbacks) result.arima_fallbacks += f;
    result.models_trained = data.series_count() * holdout;
    return result;
  }

  const std::vector<GbdtTask> tasks = gbdt_tasks(family, data);
  // Pooled single models get the worker budget inside training; many small
  // models get it across tasks.
  const std::size_t outer = tasks.size() > 1 ? options.workers : 1;
  const std::size_t inner = tasks.size() > 1 ? 1 : options.workers;
  std::vector<nlohmann::json> docs(tasks.size());
  std::vector<std::size_t> rows_used(tasks.size(), 0);
  detail::parallel_for(tasks.size(), outer, [&](std::size_t t) {
    const GbdtTask& task = tasks[t];
    GbdtParams params = options.gbdt;
    params.seed = task_seed(options.seed, task.key);
    nlohmann::json grid_doc = nullptr;
    if (options.grid_search) {
      const GridResult grid = grid_search(data, task.series, options.grid, params, inner);
      params = grid.best;
      grid_doc = nlohmann::json::array();
      for (const auto& c : grid.evaluated) {
        grid_doc.push_back({{"learning_rate", c.learning_rate},
                            {"feature_fraction", c.feature_fraction},
                            {"validation_mase", std::isfinite(c.validation_mase) ? nlohmann::json(c.validation_mase)
                                                                                  : nlohmann::json(nullptr)}});
      }
    }
    const TrainingMatrix tm = assemble_training_matrix(data, task.series);
    rows_used[t] = tm.y.size();
    const GbdtModel model = gbdt_train(tm.x, tm.y, params, inner);

    for (const SeriesRef& ref : task.series) {
      const HierarchyData& hd = data.hierarchies[ref.hierarchy];
      const std::vector<double> pred =
          gbdt_predict(model, rows_of(hd.embeddings[ref.node], hd.split.train_rows, holdout));
      auto& out = result.forecasts.series[ref.hierarchy * n + ref.node].forecast;
      std::copy(pred.begin(), pred.end(), out.begin());
    }
    nlohmann::json doc = to_json(model);
    doc["task"] = task.key;
    if (!grid_doc.is_null()) doc["grid"] = std::move(grid_doc);
    docs[t] = std::move(doc);
  });
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    result.models.push_back({tasks[t].path, std::move(docs[t])});
    result.training_rows += rows_used[t];
  }
  result.models_trained = tasks.size();
  return result;
}

ReconcileOutcome reconcile_forecasts(const ForecastSet& base, const Dataset& data, ReconMethod method,
                                     bool floor_at_zero) {
  ReconcileOutcome outcome;
  outcome.forecasts = base;
  outcome.forecasts.recon = method;
  if (method == ReconMethod::kNone) return outcome;

  const Hierarchy& h = data.hierarchy;
  const std::size_t n = h.n_total();
  if (base.series.size() != data.series_count()) throw UserError("reconcile: forecast set does not match dataset");

  MappingMatrix shared;
  if (method == ReconMethod::kBottomUp) shared = g_bottom_up(h);
  if (method == ReconMethod::kMinT) shared = g_mint_structural(h);

  Eigen::VectorXd vec(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < data.hierarchies.size(); ++k) {
    MappingMatrix g = shared;
    if (method == ReconMethod::kTopDown) {
      std::vector<std::vector<double>> history(n);
      for (std::size_t v = 0; v < n; ++v) {
        const auto train = data.training_values(k, v);
        history[v].assign(train.begin(), train.end());
      }
      const TdProportions p = td_proportions(h, history);
      if (p.uniform_fallback) ++outcome.td_uniform_fallbacks;
      g = g_top_down(h, p);
    }
    for (std::size_t step = 0; step < data.holdout; ++step) {
      for (std::size_t v = 0; v < n; ++v) {
        vec(static_cast<Eigen::Index>(v)) = base.series[k * n + v].forecast[step];
      }
      const Eigen::VectorXd coherent = reconcile(g, data.s, vec, floor_at_zero);
      for (std::size_t v = 0; v < n; ++v) {
        outcome.forecasts.series[k * n + v].forecast[step] = coherent(static_cast<Eigen::Index>(v));
      }
    }
  }
  return outcome;
}

}  // namespace htsf
