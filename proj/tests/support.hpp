#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "htsf/hierarchy.hpp"

namespace htsf::test {

// Random strict tree with `n` nodes: node i > 0 picks a parent among 0..i-1.
// Returns edges in creation order plus the leaves in a shuffled bottom order.
struct RandomTree {
  std::vector<Edge> edges;
  std::vector<std::string> bottoms;
};

inline RandomTree random_tree(std::mt19937_64& rng, std::size_t n) {
  RandomTree t;
  std::vector<int> children(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    t.edges.push_back({"n" + std::to_string(parent), "n" + std::to_string(i)});
    ++children[parent];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (children[i] == 0) t.bottoms.push_back("n" + std::to_string(i));
  }
  std::shuffle(t.bottoms.begin(), t.bottoms.end(), rng);
  return t;
}

inline Hierarchy build_random(std::mt19937_64& rng, std::size_t n) {
  const RandomTree t = random_tree(rng, n);
  return Hierarchy::build(t.edges, t.bottoms);
}

// S by recursive descendant enumeration, independent of summing_matrix.
inline Eigen::MatrixXd descendant_matrix(const Hierarchy& h) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h.n_total()),
                                            static_cast<Eigen::Index>(h.m_bottom()));
  std::vector<int> column(h.n_total(), -1);
  for (std::size_t j = 0; j < h.m_bottom(); ++j) column[h.bottom_indices()[j]] = static_cast<int>(j);
  auto mark = [&](auto&& self, std::size_t row, std::size_t node) -> void {
    if (h.children_of(node).empty()) {
      s(static_cast<Eigen::Index>(row), column[node]) = 1.0;
      return;
    }
    for (std::size_t c : h.children_of(node)) self(self, row, c);
  };
  for (std::size_t v = 0; v < h.n_total(); ++v) mark(mark, v, v);
  return s;
}

// Gauss-Jordan inverse with partial pivoting.
inline Eigen::MatrixXd gauss_jordan_inverse(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index pivot = c;
    for (Eigen::Index r = c + 1; r < n; ++r) {
      if (std::fabs(a(r, c)) > std::fabs(a(pivot, c))) pivot = r;
    }
    a.row(c).swap(a.row(pivot));
    inv.row(c).swap(inv.row(pivot));
    const double d = a(c, c);
    a.row(c) /= d;
    inv.row(c) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      a.row(r) -= f * a.row(c);
      inv.row(r) -= f * inv.row(c);
    }
  }
  return inv;
}

// (S' L^-1 S)^-1 S' L^-1 evaluated with explicit inverses.
inline Eigen::MatrixXd mint_oracle(const Eigen::MatrixXd& s) {
  Eigen::VectorXd lambda = s.rowwise().sum();
  Eigen::MatrixXd w_inv = Eigen::MatrixXd::Zero(s.rows(), s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) w_inv(i, i) = 1.0 / lambda(i);
  const Eigen::MatrixXd st_w = s.transpose() * w_inv;
  return gauss_jordan_inverse(st_w * s) * st_w;
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)) / std::max(1.0, std::fabs(b(i, j))));
    }
  }
  return worst;
}

inline Hierarchy tiny_tree() {
  const std::vector<Edge> edges{{"root", "a"}, {"root", "b"}};
  const std::vector<std::string> bottoms{"a", "b"};
  return Hierarchy::build(edges, bottoms);
}

}  // namespace htsf::test
