#include "htsf/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "htsf/error.hpp"
#include "htsf/kernels.hpp"
#include "htsf/tweedie.hpp"
#include "parallel.hpp"

namespace htsf {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw UserError("feature matrix: data size mismatch");
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw UserError("feature matrix: row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void GbdtParams::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UserError("gbdt: learning_rate must be > 0");
  if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
    throw UserError("gbdt: feature_fraction must lie in (0, 1]");
  }
  if (num_rounds < 0) throw UserError("gbdt: num_rounds must be >= 0");
  if (max_leaves < 2) throw UserError("gbdt: max_leaves must be >= 2");
  if (min_leaf_samples < 1) throw UserError("gbdt: min_leaf_samples must be >= 1");
  if (max_bins < 2 || max_bins > 256) throw UserError("gbdt: max_bins must lie in [2, 256]");
  check_tweedie_power(tweedie_power);
  if (!(l2_lambda >= 0.0)) throw UserError("gbdt: l2_lambda must be >= 0");
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace gbdt {

BinMapper BinMapper::fit(std::span<const double> column, std::size_t max_bins) {
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> distinct;
  std::vector<std::size_t> counts;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      counts.push_back(0);
    }
    ++counts.back();
  }

  auto midpoint = [](double a, double b) {
    const double mid = a + (b - a) * 0.5;
    return mid < b ? mid : a;
  };

  BinMapper mapper;
  if (distinct.size() <= max_bins) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      mapper.thresholds_.push_back(midpoint(distinct[i], distinct[i + 1]));
    }
    return mapper;
  }
  const double per_bin = static_cast<double>(sorted.size()) / static_cast<double>(max_bins);
  double cumulative = 0.0;
  std::size_t k = 1;
  for (std::size_t i = 0; i + 1 < distinct.size() && mapper.thresholds_.size() + 1 < max_bins; ++i) {
    cumulative += static_cast<double>(counts[i]);
    if (cumulative >= static_cast<double>(k) * per_bin) {
      mapper.thresholds_.push_back(midpoint(distinct[i], distinct[i + 1]));
      while (cumulative >= static_cast<double>(k) * per_bin) ++k;
    }
  }
  return mapper;
}

std::size_t BinMapper::bin(double x) const {
  return static_cast<std::size_t>(std::lower_bound(thresholds_.begin(), thresholds_.end(), x) -
                                  thresholds_.begin());
}

double split_gain(const BinStats& left, const BinStats& right, double l2_lambda) {
  const double g = left.grad + right.grad;
  const double h = left.hess + right.hess;
  return left.grad * left.grad / (left.hess + l2_lambda) + right.grad * right.grad / (right.hess + l2_lambda) -
         g * g / (h + l2_lambda);
}

Histogram build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                          std::span<const double> grad, std::span<const double> hess, std::size_t num_bins) {
  Histogram hist(num_bins);
  for (std::uint32_t r : rows) {
    BinStats& s = hist[bins[r]];
    s.grad += grad[r];
    s.hess += hess[r];
    ++s.count;
  }
  return hist;
}

SplitCandidate best_split_for_feature(const Histogram& hist, const BinMapper& mapper, int feature,
                                      const BinStats& total, int min_leaf_samples, double l2_lambda) {
  SplitCandidate best;
  best.gain = kMinSplitGain;
  const auto min_count = static_cast<std::size_t>(min_leaf_samples);
  BinStats left;
  for (std::size_t b = 0; b + 1 < hist.size(); ++b) {
    left.grad += hist[b].grad;
    left.hess += hist[b].hess;
    left.count += hist[b].count;
    if (left.count < min_count) continue;
    if (total.count - left.count < min_count) break;
    const BinStats right{total.grad - left.grad, total.hess - left.hess, total.count - left.count};
    if (!(left.hess + l2_lambda > 0.0) || !(right.hess + l2_lambda > 0.0)) continue;
    const double gain = split_gain(left, right, l2_lambda);
    if (gain > best.gain) {
      best.gain = gain;
      best.feature = feature;
      best.bin = b;
      best.threshold = mapper.threshold(b);
      best.left = left;
      best.right = right;
    }
  }
  if (!best.valid()) best.gain = 0.0;
  return best;
}

}  // namespace gbdt

namespace {

using gbdt::BinMapper;
using gbdt::BinStats;
using gbdt::Histogram;
using gbdt::SplitCandidate;

struct Leaf {
  std::vector<std::uint32_t> rows;
  std::vector<Histogram> hist;  // one per selected feature
  BinStats total;
  SplitCandidate best;
  int node = 0;
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<BinMapper>& mappers, const std::vector<std::uint8_t>& bins, std::size_t rows,
             const GbdtParams& params, std::size_t workers)
      : mappers_(mappers), bins_(bins), n_(rows), params_(params), workers_(workers) {}

  // Grows one tree on (grad, hess) over the selected features and writes each
  // row's leaf output into `delta`.
  Tree grow(std::span<const double> grad, std::span<const double> hess, const std::vector<int>& features,
            std::vector<double>& delta) {
    features_ = &features;
    grad_ = grad;
    hess_ = hess;

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Leaf> leaves(1);
    Leaf& root = leaves.front();
    root.rows.resize(n_);
    std::iota(root.rows.begin(), root.rows.end(), std::uint32_t{0});
    for (std::uint32_t r : root.rows) {
      root.total.grad += grad[r];
      root.total.hess += hess[r];
    }
    root.total.count = n_;
    root.hist = histograms(root.rows);
    root.best = find_split(root);

    while (leaves.size() < static_cast<std::size_t>(params_.max_leaves)) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].best.valid()) continue;
        if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
      }
      if (pick == leaves.size()) break;
      split(tree, leaves, pick);
    }

    for (const Leaf& leaf : leaves) {
      const double value = -leaf.total.grad / (leaf.total.hess + params_.l2_lambda);
      tree.nodes[static_cast<std::size_t>(leaf.node)].value = value;
      for (std::uint32_t r : leaf.rows) delta[r] = value;
    }
    return tree;
  }

 private:
  std::span<const std::uint8_t> column(int feature) const {
    return {bins_.data() + static_cast<std::size_t>(feature) * n_, n_};
  }

  std::vector<Histogram> histograms(const std::vector<std::uint32_t>& rows) const {
    const auto& features = *features_;
    std::vector<Histogram> out(features.size());
    detail::parallel_for(features.size(), workers_, [&](std::size_t k) {
      const int f = features[k];
      out[k] = gbdt::build_histogram(column(f), rows, grad_, hess_,
                                     mappers_[static_cast<std::size_t>(f)].num_bins());
    });
    return out;
  }

  SplitCandidate find_split(const Leaf& leaf) const {
    SplitCandidate best;
    const auto& features = *features_;
    for (std::size_t k = 0; k < features.size(); ++k) {
      const int f = features[k];
      const SplitCandidate c = gbdt::best_split_for_feature(
          leaf.hist[k], mappers_[static_cast<std::size_t>(f)], f, leaf.total, params_.min_leaf_samples,
          params_.l2_lambda);
      if (c.valid() && (!best.valid() || c.gain > best.gain)) best = c;
    }
    return best;
  }

  void split(Tree& tree, std::vector<Leaf>& leaves, std::size_t index) {
    Leaf parent = std::move(leaves[index]);
    const SplitCandidate& s = parent.best;
    const auto col = column(s.feature);

    Leaf left;
    Leaf right;
    for (std::uint32_t r : parent.rows) {
      (col[r] <= s.bin ? left.rows : right.rows).push_back(r);
    }
    left.total = s.left;
    right.total = s.right;

    // Direct histogram for the smaller child, subtraction for the larger.
    Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
    Leaf& large = left.rows.size() <= right.rows.size() ? right : left;
    small.hist = histograms(small.rows);
    large.hist = std::move(parent.hist);
    for (std::size_t k = 0; k < large.hist.size(); ++k) {
      for (std::size_t b = 0; b < large.hist[k].size(); ++b) {
        large.hist[k][b].grad -= small.hist[k][b].grad;
        large.hist[k][b].hess -= small.hist[k][b].hess;
        large.hist[k][b].count -= small.hist[k][b].count;
      }
    }

    const int left_node = static_cast<int>(tree.nodes.size());
    TreeNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = left_node;
    node.right = left_node + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    left.node = left_node;
    right.node = left_node + 1;

    left.best = find_split(left);
    right.best = find_split(right);
    leaves[index] = std::move(left);
    leaves.push_back(std::move(right));
  }

  const std::vector<BinMapper>& mappers_;
  const std::vector<std::uint8_t>& bins_;
  std::size_t n_;
  const GbdtParams& params_;
  std::size_t workers_;
  const std::vector<int>* features_ = nullptr;
  std::span<const double> grad_;
  std::span<const double> hess_;
};

std::vector<int> sample_features(std::size_t count, double fraction, std::mt19937_64& rng) {
  std::vector<int> all(count);
  std::iota(all.begin(), all.end(), 0);
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(count))));
  if (k >= count) return all;
  // Partial Fisher-Yates with a plain modulo draw; std distributions are not
  // portable across standard libraries.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (count - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GbdtModel gbdt_train(const FeatureMatrix& x, std::span<const double> y, const GbdtParams& params,
                     std::size_t workers) {
  params.validate();
  const std::size_t n = x.rows();
  const std::size_t nf = x.cols();
  if (y.size() != n) throw UserError("gbdt: target length does not match row count");
  if (nf == 0) throw UserError("gbdt: no features");
  if (n < 2 * static_cast<std::size_t>(params.min_leaf_samples)) {
    throw UserError("gbdt: need at least 2*min_leaf_samples rows, got " + std::to_string(n));
  }
  if (n > std::numeric_limits<std::uint32_t>::max()) throw UserError("gbdt: too many rows");
  for (double v : y) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw UserError("gbdt: targets must be finite and non-negative");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw UserError("gbdt: features must be finite");
  }

  std::vector<BinMapper> mappers(nf);
  std::vector<std::uint8_t> bins(n * nf);
  detail::parallel_for(nf, workers, [&](std::size_t f) {
    std::vector<double> col(n);
    for (std::size_t r = 0; r < n; ++r) col[r] = x(r, f);
    mappers[f] = BinMapper::fit(col, static_cast<std::size_t>(params.max_bins));
    for (std::size_t r = 0; r < n; ++r) bins[f * n + r] = static_cast<std::uint8_t>(mappers[f].bin(col[r]));
  });

  GbdtModel model;
  model.params = params;
  model.feature_count = nf;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  model.base_score = std::log(mean + kBaseScoreEpsilon);

  const double rho = params.tweedie_power;
  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n), hess(n), delta(n), candidate(n);
  double loss = kernels::tweedie_loss_sum(y, score, rho);
  model.loss_history.push_back(loss);

  std::mt19937_64 rng(params.seed);
  TreeGrower grower(mappers, bins, n, params, workers);
  for (int round = 0; round < params.num_rounds; ++round) {
    kernels::tweedie_grad_hess(y, score, rho, grad, hess);
    const std::vector<int> features = sample_features(nf, params.feature_fraction, rng);
    Tree tree = grower.grow(grad, hess, features, delta);
    if (tree.leaf_count() < 2) break;

    // A Newton step can overshoot on the exponential loss; halve the leaf
    // outputs until the summed loss does not increase.
    double new_loss = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= 30; ++attempt) {
      candidate = score;
      kernels::axpy(params.learning_rate, delta, candidate);
      new_loss = kernels::tweedie_loss_sum(y, candidate, rho);
      if (new_loss <= loss) {
        accepted = true;
        break;
      }
      for (TreeNode& node : tree.nodes) node.value *= 0.5;
      for (double& d : delta) d *= 0.5;
    }
    if (!accepted) break;
    score.swap(candidate);
    loss = new_loss;
    model.loss_history.push_back(loss);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

std::vector<double> gbdt_predict_raw(const GbdtModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.feature_count) {
    throw UserError("gbdt: feature count " + std::to_string(x.cols()) + " does not match model (" +
                    std::to_string(model.feature_count) + ")");
  }
  const std::size_t n = x.rows();
  std::vector<double> raw(n, model.base_score);
  std::vector<double> out(n);
  for (const Tree& tree : model.trees) {
    for (std::size_t r = 0; r < n; ++r) out[r] = tree.predict(x.row(r));
    kernels::axpy(model.params.learning_rate, out, raw);
  }
  return raw;
}

std::vector<double> gbdt_predict(const GbdtModel& model, const FeatureMatrix& x) {
  std::vector<double> raw = gbdt_predict_raw(model, x);
  std::vector<double> out(raw.size());
  kernels::exp(raw, out);
  return out;
}

}  // namespace htsf
