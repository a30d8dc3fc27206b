#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

#include "htsf/hierarchy.hpp"

namespace htsf {

enum class ReconMethod { kNone, kBottomUp, kTopDown, kMinT };

std::string_view recon_tag(ReconMethod method);      // none | BU | TD | MinT
std::string_view recon_config_name(ReconMethod method);  // none | bu | td | mint
ReconMethod parse_recon(std::string_view text);       // accepts either spelling

// m_bottom x n_total matrix G; coherent forecasts are S G y_hat.
struct MappingMatrix {
  Eigen::MatrixXd entries;
  ReconMethod method = ReconMethod::kNone;
};

// p_j = mean(bottom_j history) / mean(root history).
struct TdProportions {
  Eigen::VectorXd p;
  // Set when the root mean was zero and p fell back to 1/m.
  bool uniform_fallback = false;
};

MappingMatrix g_bottom_up(const Hierarchy& h);

// `history` holds the training values of every node in Hierarchy::nodes() order.
TdProportions td_proportions(const Hierarchy& h, std::span<const std::vector<double>> history);
MappingMatrix g_top_down(const Hierarchy& h, const TdProportions& proportions);

// G = (S' W^-1 S)^-1 S' W^-1 with W = k * diag(S 1), solved through a
// Cholesky factorisation of S' W^-1 S. k only exists to test that it cancels.
MappingMatrix g_mint_structural(const Hierarchy& h, double k = 1.0);

// S (G base). Rejects dimension mismatches and non-finite input. Negative
// outputs are kept unless `floor_at_zero` is set.
Eigen::VectorXd reconcile(const MappingMatrix& g, const SummingMatrix& s, const Eigen::VectorXd& base,
                          bool floor_at_zero = false);

}  // namespace htsf
