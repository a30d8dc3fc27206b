#include "htsf/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "htsf/error.hpp"
#include "htsf/kernels.hpp"

namespace htsf {

EvalLevel eval_level(const Hierarchy& h, std::size_t node) {
  if (!h.parent_of(node).has_value()) return EvalLevel::kTop;
  return h.is_bottom(node) ? EvalLevel::kBottom : EvalLevel::kMiddle;
}

std::string_view eval_level_name(EvalLevel level) {
  switch (level) {
    case EvalLevel::kTop:
      return "top";
    case EvalLevel::kMiddle:
      return "middle";
    case EvalLevel::kBottom:
      return "bottom";
  }
  return "bottom";
}

std::optional<double> naive_scale(std::span<const double> train) {
  if (train.size() < 2) throw UserError("mase: training series needs at least 2 points");
  const double scale =
      kernels::sum_abs_diff(train.subspan(1), train.first(train.size() - 1)) / static_cast<double>(train.size() - 1);
  if (scale == 0.0) return std::nullopt;
  return scale;
}

std::optional<double> mase_scaled(std::optional<double> scale, std::span<const double> actuals,
                                  std::span<const double> forecasts) {
  if (actuals.size() != forecasts.size()) {
    throw UserError("mase: " + std::to_string(actuals.size()) + " actuals vs " + std::to_string(forecasts.size()) +
                    " forecasts");
  }
  if (actuals.empty()) throw UserError("mase: empty evaluation window");
  if (!scale.has_value()) return std::nullopt;
  return kernels::sum_abs_diff(actuals, forecasts) / static_cast<double>(actuals.size()) / *scale;
}

std::optional<double> mase(std::span<const double> train, std::span<const double> actuals,
                           std::span<const double> forecasts) {
  if (actuals.size() != forecasts.size()) {
    throw UserError("mase: " + std::to_string(actuals.size()) + " actuals vs " + std::to_string(forecasts.size()) +
                    " forecasts");
  }
  return mase_scaled(naive_scale(train), actuals, forecasts);
}

namespace {

struct Accumulator {
  double sum = 0.0;
  std::size_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return sum / static_cast<double>(count); }
};

// Hierarchy ids in first-appearance order, so results follow score order.
std::vector<std::string> hierarchy_order(std::span<const MaseScore> scores) {
  std::vector<std::string> order;
  std::map<std::string, bool> seen;
  for (const auto& s : scores) {
    if (seen.emplace(s.hierarchy_id, true).second) order.push_back(s.hierarchy_id);
  }
  return order;
}

}  // namespace

std::array<std::optional<double>, kEvalLevels> level_means(std::span<const MaseScore> scores) {
  std::map<std::string, std::array<Accumulator, kEvalLevels>> per_hierarchy;
  for (const auto& s : scores) {
    if (s.defined()) per_hierarchy[s.hierarchy_id][static_cast<std::size_t>(s.level)].add(*s.value);
  }
  std::array<std::optional<double>, kEvalLevels> out;
  for (std::size_t j = 0; j < kEvalLevels; ++j) {
    Accumulator level;
    for (const std::string& id : hierarchy_order(scores)) {
      auto it = per_hierarchy.find(id);
      if (it != per_hierarchy.end() && it->second[j].count > 0) level.add(it->second[j].mean());
    }
    if (level.count > 0) out[j] = level.mean();
  }
  return out;
}

double avg_levels(std::span<const MaseScore> scores) {
  Accumulator acc;
  for (const auto& m : level_means(scores)) {
    if (m) acc.add(*m);
  }
  if (acc.count == 0) throw UserError("avg_levels: every level is empty");
  return acc.mean();
}

double avg_products(std::span<const MaseScore> scores) {
  std::map<std::string, Accumulator> per_hierarchy;
  for (const auto& s : scores) {
    if (s.defined()) per_hierarchy[s.hierarchy_id].add(*s.value);
  }
  Accumulator acc;
  for (const std::string& id : hierarchy_order(scores)) {
    auto it = per_hierarchy.find(id);
    if (it != per_hierarchy.end()) acc.add(it->second.mean());
  }
  if (acc.count == 0) throw UserError("avg_products: no hierarchy has a defined score");
  return acc.mean();
}

std::size_t undefined_count(std::span<const MaseScore> scores) {
  return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const MaseScore& s) {
    return !s.defined();
  }));
}

double studentized_range_q(double alpha, std::size_t k) {
  // Index k - 2.
  static constexpr double kQ05[] = {2.7718, 3.3145, 3.6332, 3.8577, 4.0301, 4.1696, 4.2863,
                                    4.3865, 4.4741, 4.5519, 4.6217, 4.6849, 4.7427, 4.7959,
                                    4.8452, 4.8910, 4.9337, 4.9739, 5.0117};
  static constexpr double kQ10[] = {2.3262, 2.9024, 3.2404, 3.4783, 3.6607, 3.8081, 3.9313,
                                    4.0370, 4.1293, 4.2112, 4.2846, 4.3512, 4.4119, 4.4678,
                                    4.5195, 4.5675, 4.6124, 4.6545, 4.6941};
  if (k < 2 || k > 20) throw UserError("mcb: number of models must lie in [2, 20], got " + std::to_string(k));
  if (std::fabs(alpha - 0.05) < 1e-12) return kQ05[k - 2];
  if (std::fabs(alpha - 0.10) < 1e-12) return kQ10[k - 2];
  throw UserError("mcb: alpha must be 0.05 or 0.10");
}

McbResult mcb_test(std::span<const std::vector<double>> rows, std::vector<std::string> models, double alpha) {
  const std::size_t k = models.size();
  const double q = studentized_range_q(alpha, k);

  McbResult result;
  result.models = std::move(models);
  std::vector<double> rank_sum(k, 0.0);
  std::vector<std::size_t> order(k);
  std::vector<double> ranks(k);
  for (const auto& row : rows) {
    if (row.size() != k) throw UserError("mcb: row width does not match model count");
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
      ++result.dropped_rows;
      continue;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    for (std::size_t i = 0; i < k;) {
      std::size_t j = i;
      while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
      i = j + 1;
    }
    for (std::size_t m = 0; m < k; ++m) rank_sum[m] += ranks[m];
    ++result.observations;
  }
  const std::size_t n = result.observations;
  if (n < 2) throw UserError("mcb: need at least 2 complete observations, got " + std::to_string(n));

  result.half_width = 0.5 * q * std::sqrt(static_cast<double>(k * (k + 1)) / (6.0 * static_cast<double>(n)));
  for (std::size_t m = 0; m < k; ++m) {
    const double r = rank_sum[m] / static_cast<double>(n);
    result.mean_rank.push_back(r);
    result.lo.push_back(r - result.half_width);
    result.hi.push_back(r + result.half_width);
  }
  result.best = static_cast<std::size_t>(
      std::min_element(result.mean_rank.begin(), result.mean_rank.end()) - result.mean_rank.begin());
  result.overlap.assign(k, std::vector<bool>(k, true));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      result.overlap[a][b] = !(result.lo[a] > result.hi[b] || result.lo[b] > result.hi[a]);
    }
  }
  for (std::size_t m = 0; m < k; ++m) {
    result.significant_vs_best.push_back(result.lo[m] > result.hi[result.best]);
  }
  return result;
}

double quantile_type7(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw UserError("quantile of empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DistributionStats distribution_stats(std::span<const double> values) {
  if (values.empty()) throw UserError("distribution_stats: empty group");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  DistributionStats d;
  d.min = sorted.front();
  d.max = sorted.back();
  d.q1 = quantile_type7(sorted, 0.25);
  d.median = quantile_type7(sorted, 0.5);
  d.q3 = quantile_type7(sorted, 0.75);
  const double iqr = d.q3 - d.q1;
  const double lo_fence = d.q1 - 1.5 * iqr;
  const double hi_fence = d.q3 + 1.5 * iqr;
  d.whisker_lo = *std::find_if(sorted.begin(), sorted.end(), [&](double v) { return v >= lo_fence; });
  d.whisker_hi = *std::find_if(sorted.rbegin(), sorted.rend(), [&](double v) { return v <= hi_fence; });
  return d;
}

std::string format_half_up(double value, int decimals) {
  if (!std::isfinite(value)) return "NA";
  char buf[512];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (ec != std::errc{}) throw InternalError("format_half_up: conversion failed");
  std::string s(buf, end);

  const bool negative = !s.empty() && s.front() == '-';
  if (negative) s.erase(0, 1);
  std::string int_part = s;
  std::string frac_part;
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    int_part = s.substr(0, dot);
    frac_part = s.substr(dot + 1);
  }
  const auto keep = static_cast<std::size_t>(decimals);
  bool round_up = frac_part.size() > keep && frac_part[keep] >= '5';
  frac_part.resize(keep, '0');

  std::string digits = int_part + frac_part;
  if (round_up) {
    std::size_t i = digits.size();
    while (i > 0) {
      --i;
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        round_up = false;
        break;
      }
    }
    if (round_up) digits.insert(digits.begin(), '1');
  }
  std::string out = digits.substr(0, digits.size() - keep);
  if (keep > 0) out += "." + digits.substr(digits.size() - keep);
  const bool all_zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
  return (negative && !all_zero ? "-" : "") + out;
}

std::string render_results_table(std::span<const ResultsRow> rows) {
  auto cell = [](const std::optional<double>& v) { return v ? format_half_up(*v, 4) : std::string("NA"); };
  std::ostringstream out;
  out << "Model,TopLevel,MiddleLevel,BottomLevel,AvgLevels,AvgProducts\n";
  for (const auto& r : rows) {
    out << r.model << ',' << cell(r.levels[0]) << ',' << cell(r.levels[1]) << ',' << cell(r.levels[2]) << ','
        << cell(r.avg_levels) << ',' << cell(r.avg_products) << '\n';
  }
  return out.str();
}

std::string render_mcb_csv(const McbResult& result) {
  std::ostringstream out;
  out << "model,mean_rank,lo,hi,significant_vs_best\n";
  for (std::size_t m = 0; m < result.models.size(); ++m) {
    out << result.models[m] << ',' << detail::format_double(result.mean_rank[m]) << ','
        << detail::format_double(result.lo[m]) << ',' << detail::format_double(result.hi[m]) << ','
        << (result.significant_vs_best[m] ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string render_mcb_svg(const McbResult& result) {
  const std::size_t k = result.models.size();
  const double width = 640.0;
  const double left = 160.0;
  const double right = 30.0;
  const double row_h = 24.0;
  const double top = 40.0;
  const double height = top + row_h * static_cast<double>(k) + 40.0;
  const double axis_lo = 1.0 - result.half_width;
  const double axis_hi = static_cast<double>(k) + result.half_width;
  auto x_of = [&](double rank) { return left + (rank - axis_lo) / (axis_hi - axis_lo) * (width - left - right); };
  auto num = [](double v) { return format_half_up(v, 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<text x=\"" << num(width / 2) << "\" y=\"20\" text-anchor=\"middle\">MCB mean ranks (N="
      << result.observations << ", half-width " << format_half_up(result.half_width, 3) << ")</text>\n";
  const double band_x0 = x_of(result.lo[result.best]);
  const double band_x1 = x_of(result.hi[result.best]);
  svg << "<rect x=\"" << num(band_x0) << "\" y=\"" << num(top - 6) << "\" width=\"" << num(band_x1 - band_x0)
      << "\" height=\"" << num(row_h * static_cast<double>(k) + 6) << "\" fill=\"#dde8f5\"/>\n";
  for (std::size_t m = 0; m < k; ++m) {
    const double y = top + row_h * (static_cast<double>(m) + 0.5);
    const char* color = result.significant_vs_best[m] ? "#b22222" : "#1f4e79";
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << result.models[m]
        << "</text>\n";
    svg << "<line x1=\"" << num(x_of(result.lo[m])) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x_of(result.hi[m]))
        << "\" y2=\"" << num(y) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<circle cx=\"" << num(x_of(result.mean_rank[m])) << "\" cy=\"" << num(y) << "\" r=\"4\" fill=\"" << color
        << "\"/>\n";
  }
  const double axis_y = top + row_h * static_cast<double>(k) + 10;
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(width - right) << "\" y2=\""
      << num(axis_y) << "\" stroke=\"black\"/>\n";
  for (std::size_t r = 1; r <= k; ++r) {
    const double x = x_of(static_cast<double>(r));
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(axis_y + 16) << "\" text-anchor=\"middle\">" << r
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace htsf
