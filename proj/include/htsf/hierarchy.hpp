#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace htsf {

struct Edge {
  std::string parent;
  std::string child;
};

// A strict aggregation tree. Node order is breadth-first from the root over
// the aggregate nodes (ties broken by edge insertion order) followed by the
// bottom nodes in the caller's bottom order, so bottom rows always form the
// trailing block of the summing matrix.
class Hierarchy {
 public:
  static Hierarchy build(std::span<const Edge> edges, std::span<const std::string> bottom_order);

  // Total -> {CA, TX, WI}; CA -> 4 stores, TX -> 3, WI -> 3.
  static Hierarchy m5_store_template();

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::string& node(std::size_t index) const { return nodes_[index]; }
  std::optional<std::size_t> index_of(const std::string& id) const;
  std::optional<std::size_t> parent_of(std::size_t index) const { return parent_[index]; }
  const std::vector<std::size_t>& children_of(std::size_t index) const { return children_[index]; }
  // Depth from the root (root = 0).
  std::size_t level_of(std::size_t index) const { return level_[index]; }
  bool is_bottom(std::size_t index) const { return children_[index].empty(); }

  // Node indices of the bottom series, in bottom order.
  const std::vector<std::size_t>& bottom_indices() const { return bottom_; }
  std::vector<std::string> bottom_order() const;

  std::size_t n_total() const { return nodes_.size(); }
  std::size_t m_bottom() const { return bottom_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> level_;
  std::vector<std::size_t> bottom_;
  std::vector<Edge> edges_;
};

// Dense n_total x m_bottom 0/1 matrix with y = S b. Rows follow
// Hierarchy::nodes(), columns follow the bottom order.
struct SummingMatrix {
  Eigen::MatrixXd entries;
  // Row index holding bottom column j.
  std::vector<std::size_t> bottom_rows;

  std::size_t n_total() const { return static_cast<std::size_t>(entries.rows()); }
  std::size_t m_bottom() const { return static_cast<std::size_t>(entries.cols()); }
};

// Diagonal of Lambda = diag(S 1): bottom-descendant counts per node. The
// structural MinT error covariance is W_h = k_h * Lambda for any k_h > 0; k_h
// cancels from the mapping matrix and has no runtime representation.
struct StructuralWeights {
  Eigen::VectorXd lambda_diag;
};

struct CoherenceResult {
  bool coherent = false;
  double max_violation = 0.0;
};

SummingMatrix summing_matrix(const Hierarchy& h);
Eigen::VectorXd aggregate_bottom(const SummingMatrix& s, const Eigen::VectorXd& bottom);
// Coherent iff |y_i - (S y_bottom)_i| <= tol * (1 + |y_i|) for every node.
CoherenceResult coherence_check(const SummingMatrix& s, const Eigen::VectorXd& y, double tol);
StructuralWeights structural_weights(const SummingMatrix& s);

// CSV with header `parent_id,child_id`.
std::vector<Edge> load_edges_csv(const std::filesystem::path& path);
// One node id per line; blank lines ignored.
std::vector<std::string> load_bottom_order(const std::filesystem::path& path);
void write_edges_csv(const std::filesystem::path& path, std::span<const Edge> edges);
void write_bottom_order(const std::filesystem::path& path, std::span<const std::string> bottom_order);

}  // namespace htsf
