#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "htsf/hierarchy.hpp"

namespace htsf {

// Three evaluation levels: the root, the internal (non-root, non-leaf) nodes,
// and the leaves. A single-node tree has only a top level.
enum class EvalLevel : int { kTop = 0, kMiddle = 1, kBottom = 2 };
inline constexpr std::size_t kEvalLevels = 3;

EvalLevel eval_level(const Hierarchy& h, std::size_t node);
std::string_view eval_level_name(EvalLevel level);  // top | middle | bottom

struct MaseScore {
  std::string hierarchy_id;
  std::string node_id;
  EvalLevel level = EvalLevel::kBottom;
  std::optional<double> value;  // empty when the naive scale is zero

  bool defined() const { return value.has_value(); }
};

// Mean absolute one-step naive difference of the training portion; empty when zero.
std::optional<double> naive_scale(std::span<const double> train);

// mean|actual - forecast| / naive_scale(train).
std::optional<double> mase(std::span<const double> train, std::span<const double> actuals,
                           std::span<const double> forecasts);
// Same, with the scale precomputed.
std::optional<double> mase_scaled(std::optional<double> scale, std::span<const double> actuals,
                                  std::span<const double> forecasts);

// Per level: mean over hierarchies of the mean over that level's defined
// series. Empty when no hierarchy has a defined score at the level.
std::array<std::optional<double>, kEvalLevels> level_means(std::span<const MaseScore> scores);
// Mean of the non-empty level means.
double avg_levels(std::span<const MaseScore> scores);
// Mean over hierarchies of the mean over each hierarchy's defined series.
double avg_products(std::span<const MaseScore> scores);
std::size_t undefined_count(std::span<const MaseScore> scores);

struct McbResult {
  std::vector<std::string> models;
  std::vector<double> mean_rank;
  std::vector<double> lo;
  std::vector<double> hi;
  double half_width = 0.0;
  std::size_t best = 0;
  std::vector<bool> significant_vs_best;  // interval entirely above the best's
  std::vector<std::vector<bool>> overlap;
  std::size_t observations = 0;
  std::size_t dropped_rows = 0;
};

// Upper-alpha studentized range quantile for infinite degrees of freedom.
// Embedded table for alpha in {0.05, 0.10} and k = 2..20.
double studentized_range_q(double alpha, std::size_t k);

// Rank-based multiple comparisons with the best. `rows` is N observations by
// k models; lower scores rank better and ties share the average rank. Rows
// holding a non-finite entry are dropped.
McbResult mcb_test(std::span<const std::vector<double>> rows, std::vector<std::string> models,
                   double alpha = 0.05);

struct DistributionStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_lo = 0.0;  // smallest value >= q1 - 1.5 IQR
  double whisker_hi = 0.0;  // largest value <= q3 + 1.5 IQR
};

// Quantiles interpolate linearly between order statistics (type 7).
double quantile_type7(std::span<const double> sorted, double prob);
DistributionStats distribution_stats(std::span<const double> values);

struct ResultsRow {
  std::string model;
  std::array<std::optional<double>, kEvalLevels> levels;
  std::optional<double> avg_levels;
  std::optional<double> avg_products;
  std::size_t undefined = 0;
};

// Decimal half-up rounding of the shortest round-trip representation.
std::string format_half_up(double value, int decimals = 4);

// `Model,TopLevel,MiddleLevel,BottomLevel,AvgLevels,AvgProducts`, 4 decimals,
// "NA" for empty cells.
std::string render_results_table(std::span<const ResultsRow> rows);
std::string render_mcb_csv(const McbResult& result);
std::string render_mcb_svg(const McbResult& result);

}  // namespace htsf
