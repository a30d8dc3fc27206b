#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "htsf/arima.hpp"
#include "htsf/data.hpp"
#include "htsf/gbdt.hpp"
#include "htsf/hierarchy.hpp"
#include "htsf/reconcile.hpp"

namespace htsf {

// Information-utilisation scope of a pooled model.
enum class Scope {
  kLocal,         // one model per series
  kPerHierarchy,  // one model per hierarchy, pooling its series
  kGlobal,        // one model pooling every series of every hierarchy
};

enum class ModelFamily { kEs, kArima, kGbdtLocal, kGbdtPerHierarchy, kGbdtGlobal };

std::string_view family_tag(ModelFamily family);          // ES | ARIMA | loc | nfg | fg
std::string_view family_config_name(ModelFamily family);  // es | arima | gbdt-local | gbdt-nfg | gbdt-fg
ModelFamily parse_family(std::string_view text);
// Table label, e.g. "ES", "nfg_GBDT-MinT".
std::string model_label(ModelFamily family, ReconMethod recon);

struct HierarchyData {
  std::string id;
  std::vector<SeriesFrame> frames;          // Hierarchy::nodes() order
  std::vector<EmbeddingMatrix> embeddings;  // same order
  SplitSpec split;
};

struct Dataset {
  Hierarchy hierarchy;
  SummingMatrix s;
  std::size_t lags = 60;
  std::size_t horizon = 1;
  std::size_t holdout = 28;
  std::vector<HierarchyData> hierarchies;

  std::size_t series_count() const { return hierarchies.size() * hierarchy.n_total(); }
  std::size_t series_length() const;
  // Values preceding the first test target.
  std::span<const double> training_values(std::size_t h, std::size_t node) const;
};

Dataset build_dataset(const SalesPanel& panel, const Hierarchy& hierarchy, std::size_t lags = 60,
                      std::size_t holdout = 28, std::size_t workers = 1);

struct SeriesRef {
  std::size_t hierarchy = 0;
  std::size_t node = 0;
};

// Series pooled by one model: LOCAL -> (hierarchy, node); PER_HIERARCHY ->
// every node of `hierarchy`; GLOBAL -> everything (indices ignored).
std::vector<SeriesRef> series_in_scope(const Dataset& data, Scope scope, std::size_t hierarchy = 0,
                                       std::size_t node = 0);

struct RowKey {
  std::uint32_t hierarchy = 0;
  std::uint32_t node = 0;
  std::uint32_t t = 0;  // 1-based day index of the target
};

struct TrainingMatrix {
  FeatureMatrix x;
  std::vector<double> y;
  std::vector<RowKey> provenance;
};

// Training rows of the given series, stacked by hierarchy, node, then time.
// `drop_tail` removes that many final training rows per series.
TrainingMatrix assemble_training_matrix(const Dataset& data, std::span<const SeriesRef> series,
                                        std::size_t drop_tail = 0);
TrainingMatrix assemble_training_matrix(const Dataset& data, Scope scope, std::size_t hierarchy = 0,
                                        std::size_t node = 0);

struct HyperGrid {
  std::vector<double> learning_rates{0.01, 0.03, 0.05, 0.07, 0.09, 0.11};
  std::vector<double> feature_fractions{0.3, 0.5, 0.7};

  std::size_t size() const { return learning_rates.size() * feature_fractions.size(); }
};

struct GridCandidate {
  double learning_rate = 0.0;
  double feature_fraction = 0.0;
  double validation_mase = 0.0;  // +inf when no series has a defined score
};

struct GridResult {
  GbdtParams best;
  std::vector<GridCandidate> evaluated;
};

// Holds out the last `validation` training rows of every series, trains each
// grid point on the rest and keeps the lowest mean validation MASE. Ties go to
// the lower learning rate, then the lower feature fraction.
GridResult grid_search(const Dataset& data, std::span<const SeriesRef> series, const HyperGrid& grid,
                       const GbdtParams& base, std::size_t workers = 1, std::size_t validation = 28);

struct SeriesForecast {
  std::string hierarchy_id;
  std::string node_id;
  std::vector<double> forecast;
  std::vector<double> actual;
};

struct ForecastSet {
  ModelFamily family = ModelFamily::kEs;
  ReconMethod recon = ReconMethod::kNone;
  std::vector<SeriesForecast> series;  // hierarchy, then node order
};

struct ForecastOptions {
  GbdtParams gbdt;
  bool grid_search = false;
  HyperGrid grid;
  ArimaOrder arima_order;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct PersistedModel {
  std::string relative_path;
  nlohmann::json document;
};

struct BaseForecastResult {
  ForecastSet forecasts;
  std::vector<PersistedModel> models;
  std::size_t models_trained = 0;
  std::size_t arima_fallbacks = 0;
  std::size_t training_rows = 0;
};

// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view key);
std::uint64_t task_seed(std::uint64_t seed, std::string_view task_key);

// One-step forecasts for every test row of every series. Each row is
// predicted from its own observed lags; nothing predicted is fed back.
BaseForecastResult produce_base_forecasts(ModelFamily family, const Dataset& data, const ForecastOptions& options);

struct ReconcileOutcome {
  ForecastSet forecasts;
  std::size_t td_uniform_fallbacks = 0;
};

// Applies S G to the base forecasts of each hierarchy at each step.
ReconcileOutcome reconcile_forecasts(const ForecastSet& base, const Dataset& data, ReconMethod method,
                                     bool floor_at_zero = false);

}  // namespace htsf
