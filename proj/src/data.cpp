#include "htsf/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "csv.hpp"
#include "htsf/error.hpp"

namespace htsf {

std::size_t SalesPanel::record_count() const {
  std::size_t n = 0;
  for (const auto& s : series) n += s.values.size();
  return n;
}

std::vector<std::string> SalesPanel::hierarchy_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : series) {
    if (ids.empty() || ids.back() != s.hierarchy_id) ids.push_back(s.hierarchy_id);
  }
  return ids;
}

SalesPanel load_sales_csv(const std::filesystem::path& path) {
  detail::CsvReader reader(path, {"hierarchy_id", "node_id", "t", "value"});
  std::map<std::pair<std::string, std::string>, std::map<long long, double>> grouped;
  while (auto row = reader.next()) {
    const auto& f = *row;
    const auto t = detail::parse_int(f[2]);
    if (!t) throw UserError(reader.location() + ": non-numeric t '" + f[2] + "'");
    const auto value = detail::parse_double(f[3]);
    if (!value || !std::isfinite(*value)) {
      throw UserError(reader.location() + ": non-numeric value '" + f[3] + "'");
    }
    if (*value < 0.0) throw UserError(reader.location() + ": negative sales value " + f[3]);
    if (f[0].empty() || f[1].empty()) throw UserError(reader.location() + ": empty id");
    auto& series = grouped[{f[0], f[1]}];
    if (!series.emplace(*t, *value).second) {
      throw UserError(reader.location() + ": duplicate key (" + f[0] + ", " + f[1] + ", " + f[2] + ")");
    }
  }

  SalesPanel panel;
  for (auto& [key, by_t] : grouped) {
    BottomSeries s{key.first, key.second, {}};
    s.values.reserve(by_t.size());
    long long expected = 1;
    for (const auto& [t, v] : by_t) {
      if (t != expected) {
        throw UserError(path.string() + ": non-contiguous t in series (" + key.first + ", " + key.second +
                        "): expected t=" + std::to_string(expected) + ", found t=" + std::to_string(t));
      }
      s.values.push_back(v);
      ++expected;
    }
    panel.series.push_back(std::move(s));
  }
  if (panel.series.empty()) throw UserError(path.string() + ": no sales records");
  return panel;
}

void write_sales_csv(const std::filesystem::path& path, const SalesPanel& panel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << "hierarchy_id,node_id,t,value\n";
  for (const auto& s : panel.series) {
    for (std::size_t t = 0; t < s.values.size(); ++t) {
      out << s.hierarchy_id << ',' << s.node_id << ',' << (t + 1) << ','
          << detail::format_double(s.values[t]) << '\n';
    }
  }
}

std::vector<SeriesFrame> to_hierarchy_series(const SalesPanel& panel, const Hierarchy& h) {
  const SummingMatrix s = summing_matrix(h);
  const std::size_t m = h.m_bottom();
  std::vector<SeriesFrame> frames;

  std::size_t i = 0;
  while (i < panel.series.size()) {
    const std::string& hid = panel.series[i].hierarchy_id;
    std::map<std::string, const BottomSeries*> by_node;
    while (i < panel.series.size() && panel.series[i].hierarchy_id == hid) {
      by_node.emplace(panel.series[i].node_id, &panel.series[i]);
      ++i;
    }

    std::vector<const BottomSeries*> bottoms;
    for (std::size_t idx : h.bottom_indices()) {
      auto it = by_node.find(h.node(idx));
      if (it == by_node.end()) {
        throw UserError("hierarchy " + hid + ": missing bottom series " + h.node(idx));
      }
      bottoms.push_back(it->second);
    }
    if (by_node.size() != m) {
      for (const auto& [node, ptr] : by_node) {
        const auto idx = h.index_of(node);
        if (!idx || !h.is_bottom(*idx)) {
          throw UserError("hierarchy " + hid + ": node id " + node + " is not a bottom node of the hierarchy");
        }
      }
    }
    const std::size_t T = bottoms.front()->values.size();
    for (const BottomSeries* b : bottoms) {
      if (b->values.size() != T) {
        throw UserError("hierarchy " + hid + ": length mismatch across bottom series (" +
                        std::to_string(b->values.size()) + " vs " + std::to_string(T) + ")");
      }
    }

    std::vector<SeriesFrame> local(h.n_total());
    for (std::size_t v = 0; v < h.n_total(); ++v) {
      local[v] = {hid, h.node(v), std::vector<double>(T)};
    }
    Eigen::VectorXd b(static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < m; ++j) b(static_cast<Eigen::Index>(j)) = bottoms[j]->values[t];
      const Eigen::VectorXd y = aggregate_bottom(s, b);
      for (std::size_t v = 0; v < h.n_total(); ++v) local[v].values[t] = y(static_cast<Eigen::Index>(v));
    }
    for (auto& f : local) frames.push_back(std::move(f));
  }
  return frames;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (cols_ < 2 || data_.size() != rows_ * cols_) {
    throw UserError("embedding: data size does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

EmbeddingMatrix build_embedding(const SeriesFrame& frame, std::size_t lags, std::size_t horizon) {
  if (horizon < 1) throw UserError("embedding: horizon must be >= 1");
  const std::size_t T = frame.values.size();
  const std::size_t window = lags + 1 + horizon;
  if (T < window) {
    throw UserError("embedding: series (" + frame.hierarchy_id + ", " + frame.node_id + ") too short: T=" +
                    std::to_string(T) + " < " + std::to_string(window));
  }
  const std::size_t rows = T - window + 1;
  const std::size_t cols = lags + 2;
  std::vector<double> data(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double* out = data.data() + r * cols;
    std::copy_n(frame.values.begin() + static_cast<std::ptrdiff_t>(r), lags + 1, out);
    out[lags + 1] = frame.values[r + lags + horizon];
  }
  EmbeddingMatrix em(rows, cols, std::move(data));
  em.hierarchy_id = frame.hierarchy_id;
  em.node_id = frame.node_id;
  return em;
}

SplitSpec split_holdout(const EmbeddingMatrix& em, std::size_t holdout) {
  if (holdout >= em.rows()) {
    throw UserError("split: holdout " + std::to_string(holdout) + " must be smaller than row count " +
                    std::to_string(em.rows()));
  }
  return {holdout, em.rows() - holdout, holdout};
}

namespace {

constexpr char kMagic[16] = {'H', 'T', 'S', 'F', '-', 'E', 'M', 'B', '\0'};

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw UserError(path.string() + ": truncated embedding file");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& em) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint16_t>(out, kEmbeddingFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(em.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(em.cols()));
  for (double v : em.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  char magic[16];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw UserError(path.string() + ": not an embedding file (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(in, path);
  if (version != kEmbeddingFormatVersion) {
    throw UserError(path.string() + ": unsupported embedding version " + std::to_string(version));
  }
  const std::size_t rows = get_le<std::uint32_t>(in, path);
  const std::size_t cols = get_le<std::uint32_t>(in, path);
  std::vector<double> data(rows * cols);
  for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(in, path));
  return EmbeddingMatrix(rows, cols, std::move(data));
}

}  // namespace htsf
