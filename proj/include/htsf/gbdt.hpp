#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace htsf {

// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }
  void append_row(std::span<const double> values);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct GbdtParams {
  double learning_rate = 0.05;
  double feature_fraction = 0.7;
  int num_rounds = 100;
  int max_leaves = 31;
  int min_leaf_samples = 20;
  int max_bins = 255;
  double tweedie_power = 1.5;
  double l2_lambda = 0.0;
  std::uint64_t seed = 0;

  // Throws UserError on any out-of-range field.
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before shrinkage
};

class Tree {
 public:
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;
};

struct GbdtModel {
  double base_score = 0.0;  // F0 = log(mean(y) + 1e-12)
  std::vector<Tree> trees;
  GbdtParams params;
  std::size_t feature_count = 0;
  // Summed training loss before the first round and after every committed
  // round. Not persisted.
  std::vector<double> loss_history;
};

inline constexpr double kBaseScoreEpsilon = 1e-12;

// Histogram-binned, leaf-wise boosting on the Tweedie objective. Per-feature
// histograms are built in parallel on `workers` threads; the result does not
// depend on the worker count.
GbdtModel gbdt_train(const FeatureMatrix& x, std::span<const double> y, const GbdtParams& params,
                     std::size_t workers = 1);

// Raw scores F0 + lr * sum(tree outputs).
std::vector<double> gbdt_predict_raw(const GbdtModel& model, const FeatureMatrix& x);
// exp of the raw score; strictly positive.
std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& x);

namespace gbdt {

// Equal-frequency quantile bins for one feature. Thresholds are raw values
// strictly between adjacent observed values; bin b holds
// (threshold[b-1], threshold[b]].
class BinMapper {
 public:
  static BinMapper fit(std::span<const double> column, std::size_t max_bins);

  std::size_t num_bins() const { return thresholds_.size() + 1; }
  std::size_t bin(double x) const;
  double threshold(std::size_t bin) const { return thresholds_[bin]; }
  const std::vector<double>& thresholds() const { return thresholds_; }

 private:
  std::vector<double> thresholds_;
};

struct BinStats {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

using Histogram = std::vector<BinStats>;

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  std::size_t bin = 0;
  double threshold = 0.0;
  BinStats left;
  BinStats right;

  bool valid() const { return feature >= 0; }
};

// Splits must beat this gain to be taken.
inline constexpr double kMinSplitGain = 1e-15;

double split_gain(const BinStats& left, const BinStats& right, double l2_lambda);

Histogram build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                          std::span<const double> grad, std::span<const double> hess, std::size_t num_bins);

// Best threshold for one feature given its histogram and the node totals.
// Ties keep the lowest bin.
SplitCandidate best_split_for_feature(const Histogram& hist, const BinMapper& mapper, int feature,
                                      const BinStats& total, int min_leaf_samples, double l2_lambda);

}  // namespace gbdt

}  // namespace htsf
