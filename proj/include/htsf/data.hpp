#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "htsf/hierarchy.hpp"

namespace htsf {

struct BottomSeries {
  std::string hierarchy_id;
  std::string node_id;
  std::vector<double> values;  // t = 1..T
};

// Validated bottom-level sales. Series are ordered by hierarchy id, then by
// node id; both orders are lexicographic so file row order never matters.
struct SalesPanel {
  std::vector<BottomSeries> series;

  std::size_t record_count() const;
  std::vector<std::string> hierarchy_ids() const;
};

struct SeriesFrame {
  std::string hierarchy_id;
  std::string node_id;
  std::vector<double> values;
};

// Rolling-window embedding of one series. Each row holds `lags + 1` features
// (oldest first, current-day value last) followed by one target `horizon`
// steps past the current day.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::string hierarchy_id;
  std::string node_id;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t feature_count() const { return cols_ - 1; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> features(std::size_t r) const { return {data_.data() + r * cols_, cols_ - 1}; }
  double target(std::size_t r) const { return data_[r * cols_ + cols_ - 1]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SplitSpec {
  std::size_t holdout = 28;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
};

// Header `hierarchy_id,node_id,t,value`. Rejects missing columns,
// non-numeric or negative values, duplicate keys and gaps in t.
SalesPanel load_sales_csv(const std::filesystem::path& path);
void write_sales_csv(const std::filesystem::path& path, const SalesPanel& panel);

// One frame per hierarchy node per hierarchy, ordered by hierarchy id then
// Hierarchy::nodes(). Upper frames are S b_t at every t.
std::vector<SeriesFrame> to_hierarchy_series(const SalesPanel& panel, const Hierarchy& h);

EmbeddingMatrix build_embedding(const SeriesFrame& frame, std::size_t lags = 60, std::size_t horizon = 1);
SplitSpec split_holdout(const EmbeddingMatrix& em, std::size_t holdout = 28);

// Binary layout: 16-byte magic "HTSF-EMB\0" (zero padded), u16 version,
// u32 rows, u32 cols, then rows*cols little-endian f64 in row-major order.
inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;
void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& em);
EmbeddingMatrix load_embedding(const std::filesystem::path& path);

}  // namespace htsf
