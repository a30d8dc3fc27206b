#include "htsf/hierarchy.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <unordered_set>

#include "csv.hpp"
#include "htsf/error.hpp"

namespace htsf {

Hierarchy Hierarchy::build(std::span<const Edge> edges, std::span<const std::string> bottom_order) {
  if (bottom_order.empty()) throw UserError("hierarchy: bottom order is empty");

  // Nodes in order of first appearance; children in edge insertion order.
  std::vector<std::string> seen;
  std::unordered_map<std::string, std::size_t> id;
  auto intern = [&](const std::string& name) {
    if (name.empty()) throw UserError("hierarchy: empty node id");
    auto [it, inserted] = id.emplace(name, seen.size());
    if (inserted) seen.push_back(name);
    return it->second;
  };

  std::set<std::pair<std::string, std::string>> unique_edges;
  std::vector<std::optional<std::size_t>> parent;
  std::vector<std::vector<std::size_t>> children;
  for (const Edge& e : edges) {
    if (!unique_edges.emplace(e.parent, e.child).second) {
      throw UserError("hierarchy: duplicate edge " + e.parent + " -> " + e.child);
    }
    if (e.parent == e.child) throw UserError("hierarchy: cycle detected at node " + e.parent);
    const std::size_t p = intern(e.parent);
    const std::size_t c = intern(e.child);
    parent.resize(seen.size());
    children.resize(seen.size());
    if (parent[c].has_value()) {
      throw UserError("hierarchy: node " + e.child + " has multiple parents");
    }
    parent[c] = p;
    children[p].push_back(c);
  }

  if (edges.empty()) {
    if (bottom_order.size() != 1) {
      throw UserError("hierarchy: bottom order does not match the leaf set of an edgeless tree");
    }
    intern(bottom_order.front());
    parent.resize(1);
    children.resize(1);
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!parent[i].has_value()) roots.push_back(i);
  }
  if (roots.empty()) throw UserError("hierarchy: cycle detected (no root)");
  if (roots.size() > 1) {
    throw UserError("hierarchy: multiple roots (" + seen[roots[0]] + ", " + seen[roots[1]] + ")");
  }

  // Breadth-first walk; anything unreachable from the root sits on a cycle.
  std::vector<std::size_t> bfs;
  std::vector<std::size_t> depth(seen.size(), 0);
  std::vector<bool> visited(seen.size(), false);
  std::deque<std::size_t> queue{roots.front()};
  visited[roots.front()] = true;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    bfs.push_back(v);
    for (std::size_t c : children[v]) {
      if (visited[c]) throw UserError("hierarchy: cycle detected at node " + seen[c]);
      visited[c] = true;
      depth[c] = depth[v] + 1;
      queue.push_back(c);
    }
  }
  if (bfs.size() != seen.size()) throw UserError("hierarchy: cycle detected (unreachable nodes)");

  std::unordered_set<std::string> leaves;
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (children[i].empty()) leaves.insert(seen[i]);
  }
  std::unordered_set<std::string> listed;
  for (const std::string& b : bottom_order) {
    if (!listed.insert(b).second) throw UserError("hierarchy: duplicate bottom node " + b);
    if (!leaves.contains(b)) {
      throw UserError("hierarchy: bottom order entry " + b + " is not a leaf of the tree");
    }
  }
  if (listed.size() != leaves.size()) {
    throw UserError("hierarchy: bottom order mismatch with leaf set (" + std::to_string(listed.size()) +
                    " listed, " + std::to_string(leaves.size()) + " leaves)");
  }

  Hierarchy h;
  for (std::size_t v : bfs) {
    if (!children[v].empty()) h.nodes_.push_back(seen[v]);
  }
  for (const std::string& b : bottom_order) h.nodes_.push_back(b);

  const std::size_t n = h.nodes_.size();
  for (std::size_t i = 0; i < n; ++i) h.index_.emplace(h.nodes_[i], i);
  h.parent_.resize(n);
  h.children_.resize(n);
  h.level_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t old = id.at(h.nodes_[i]);
    h.level_[i] = depth[old];
    if (parent[old].has_value()) h.parent_[i] = h.index_.at(seen[*parent[old]]);
    for (std::size_t c : children[old]) h.children_[i].push_back(h.index_.at(seen[c]));
  }
  for (const std::string& b : bottom_order) h.bottom_.push_back(h.index_.at(b));
  h.edges_.assign(edges.begin(), edges.end());
  return h;
}

Hierarchy Hierarchy::m5_store_template() {
  const std::vector<std::pair<std::string, int>> states{{"CA", 4}, {"TX", 3}, {"WI", 3}};
  std::vector<Edge> edges;
  std::vector<std::string> bottoms;
  for (const auto& [state, stores] : states) edges.push_back({"Total", state});
  for (const auto& [state, stores] : states) {
    for (int s = 1; s <= stores; ++s) {
      const std::string store = state + "_" + std::to_string(s);
      edges.push_back({state, store});
      bottoms.push_back(store);
    }
  }
  return build(edges, bottoms);
}

std::optional<std::size_t> Hierarchy::index_of(const std::string& id) const {
  if (auto it = index_.find(id); it != index_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> Hierarchy::bottom_order() const {
  std::vector<std::string> out;
  out.reserve(bottom_.size());
  for (std::size_t b : bottom_) out.push_back(nodes_[b]);
  return out;
}

SummingMatrix summing_matrix(const Hierarchy& h) {
  const std::size_t n = h.n_total();
  const std::size_t m = h.m_bottom();
  SummingMatrix s;
  s.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  s.bottom_rows = h.bottom_indices();
  // Walk each bottom node's ancestor chain.
  for (std::size_t j = 0; j < m; ++j) {
    std::optional<std::size_t> v = h.bottom_indices()[j];
    while (v.has_value()) {
      s.entries(static_cast<Eigen::Index>(*v), static_cast<Eigen::Index>(j)) = 1.0;
      v = h.parent_of(*v);
    }
  }
  return s;
}

Eigen::VectorXd aggregate_bottom(const SummingMatrix& s, const Eigen::VectorXd& bottom) {
  if (static_cast<std::size_t>(bottom.size()) != s.m_bottom()) {
    throw UserError("aggregate_bottom: expected " + std::to_string(s.m_bottom()) +
                    " bottom values, got " + std::to_string(bottom.size()));
  }
  Eigen::VectorXd y = s.entries * bottom;
  // Bottom rows are exact copies, independent of how the product was summed.
  for (std::size_t j = 0; j < s.m_bottom(); ++j) {
    y(static_cast<Eigen::Index>(s.bottom_rows[j])) = bottom(static_cast<Eigen::Index>(j));
  }
  return y;
}

CoherenceResult coherence_check(const SummingMatrix& s, const Eigen::VectorXd& y, double tol) {
  if (static_cast<std::size_t>(y.size()) != s.n_total()) {
    throw UserError("coherence_check: expected " + std::to_string(s.n_total()) + " values, got " +
                    std::to_string(y.size()));
  }
  Eigen::VectorXd bottom(static_cast<Eigen::Index>(s.m_bottom()));
  for (std::size_t j = 0; j < s.m_bottom(); ++j) {
    bottom(static_cast<Eigen::Index>(j)) = y(static_cast<Eigen::Index>(s.bottom_rows[j]));
  }
  const Eigen::VectorXd implied = s.entries * bottom;
  CoherenceResult result{true, 0.0};
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double violation = std::fabs(y(i) - implied(i));
    if (!(violation <= tol * (1.0 + std::fabs(y(i))))) result.coherent = false;
    if (!(violation <= result.max_violation)) result.max_violation = violation;
  }
  return result;
}

StructuralWeights structural_weights(const SummingMatrix& s) {
  return {s.entries.rowwise().sum()};
}

std::vector<Edge> load_edges_csv(const std::filesystem::path& path) {
  detail::CsvReader reader(path, {"parent_id", "child_id"});
  std::vector<Edge> edges;
  while (auto row = reader.next()) edges.push_back({(*row)[0], (*row)[1]});
  return edges;
}

std::vector<std::string> load_bottom_order(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open bottom order file: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void write_edges_csv(const std::filesystem::path& path, std::span<const Edge> edges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << "parent_id,child_id\n";
  for (const Edge& e : edges) out << e.parent << ',' << e.child << '\n';
}

void write_bottom_order(const std::filesystem::path& path, std::span<const std::string> bottom_order) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  for (const std::string& b : bottom_order) out << b << '\n';
}

}  // namespace htsf
