#include "htsf/reconcile.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "htsf/error.hpp"

namespace htsf {

std::string_view recon_tag(ReconMethod method) {
  switch (method) {
    case ReconMethod::kNone:
      return "none";
    case ReconMethod::kBottomUp:
      return "BU";
    case ReconMethod::kTopDown:
      return "TD";
    case ReconMethod::kMinT:
      return "MinT";
  }
  return "none";
}

std::string_view recon_config_name(ReconMethod method) {
  switch (method) {
    case ReconMethod::kNone:
      return "none";
    case ReconMethod::kBottomUp:
      return "bu";
    case ReconMethod::kTopDown:
      return "td";
    case ReconMethod::kMinT:
      return "mint";
  }
  return "none";
}

ReconMethod parse_recon(std::string_view text) {
  for (ReconMethod m : {ReconMethod::kNone, ReconMethod::kBottomUp, ReconMethod::kTopDown, ReconMethod::kMinT}) {
    if (text == recon_tag(m) || text == recon_config_name(m)) return m;
  }
  throw UserError("unknown reconciliation method '" + std::string(text) + "'");
}

MappingMatrix g_bottom_up(const Hierarchy& h) {
  const auto n = static_cast<Eigen::Index>(h.n_total());
  const auto m = static_cast<Eigen::Index>(h.m_bottom());
  MappingMatrix g{Eigen::MatrixXd::Zero(m, n), ReconMethod::kBottomUp};
  for (Eigen::Index j = 0; j < m; ++j) {
    g.entries(j, static_cast<Eigen::Index>(h.bottom_indices()[static_cast<std::size_t>(j)])) = 1.0;
  }
  return g;
}

TdProportions td_proportions(const Hierarchy& h, std::span<const std::vector<double>> history) {
  if (history.size() != h.n_total()) {
    throw UserError("top-down: expected history for " + std::to_string(h.n_total()) + " nodes, got " +
                    std::to_string(history.size()));
  }
  auto mean = [](const std::vector<double>& v) {
    if (v.empty()) throw UserError("top-down: empty training history");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto m = static_cast<Eigen::Index>(h.m_bottom());
  TdProportions out;
  out.p.resize(m);
  const double root_mean = mean(history[0]);
  if (root_mean == 0.0) {
    out.p.setConstant(1.0 / static_cast<double>(m));
    out.uniform_fallback = true;
    return out;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    out.p(j) = mean(history[h.bottom_indices()[static_cast<std::size_t>(j)]]) / root_mean;
  }
  return out;
}

MappingMatrix g_top_down(const Hierarchy& h, const TdProportions& proportions) {
  const auto n = static_cast<Eigen::Index>(h.n_total());
  const auto m = static_cast<Eigen::Index>(h.m_bottom());
  if (proportions.p.size() != m) throw UserError("top-down: proportion vector length mismatch");
  MappingMatrix g{Eigen::MatrixXd::Zero(m, n), ReconMethod::kTopDown};
  g.entries.col(0) = proportions.p;
  return g;
}

MappingMatrix g_mint_structural(const Hierarchy& h, double k) {
  if (!(k > 0.0)) throw UserError("mint: scale k must be positive");
  const SummingMatrix s = summing_matrix(h);
  const StructuralWeights w = structural_weights(s);
  const Eigen::VectorXd w_inv = (k * w.lambda_diag).cwiseInverse();
  const Eigen::MatrixXd st_winv = s.entries.transpose() * w_inv.asDiagonal();
  const Eigen::MatrixXd normal = st_winv * s.entries;
  const Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success) throw InternalError("mint: S' W^-1 S is not positive definite");
  return {llt.solve(st_winv), ReconMethod::kMinT};
}

Eigen::VectorXd reconcile(const MappingMatrix& g, const SummingMatrix& s, const Eigen::VectorXd& base,
                          bool floor_at_zero) {
  if (g.entries.cols() != base.size() || g.entries.rows() != s.entries.cols()) {
    throw UserError("reconcile: dimension mismatch (G is " + std::to_string(g.entries.rows()) + "x" +
                    std::to_string(g.entries.cols()) + ", base has " + std::to_string(base.size()) + ")");
  }
  if (!base.allFinite()) throw UserError("reconcile: non-finite base forecast");
  Eigen::VectorXd out = s.entries * (g.entries * base);
  if (floor_at_zero) out = out.cwiseMax(0.0);
  return out;
}

}  // namespace htsf
