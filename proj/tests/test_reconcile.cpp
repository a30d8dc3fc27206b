#include <doctest.h>

#include <random>

#include "htsf/error.hpp"
#include "htsf/reconcile.hpp"
#include "support.hpp"

using namespace htsf;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("bottom-up mapping") {
  const Hierarchy m5 = Hierarchy::m5_store_template();
  const MappingMatrix g = g_bottom_up(m5);
  REQUIRE(g.entries.rows() == 10);
  REQUIRE(g.entries.cols() == 14);
  CHECK(g.entries.leftCols(4).isZero(0.0));
  CHECK(g.entries.rightCols(10).isIdentity(0.0));

  Eigen::MatrixXd tiny(2, 3);
  tiny << 0, 1, 0, 0, 0, 1;
  CHECK(g_bottom_up(test::tiny_tree()).entries == tiny);
  CHECK(g_bottom_up(Hierarchy::build({}, std::vector<std::string>{"a"})).entries == Eigen::MatrixXd::Ones(1, 1));
}

TEST_CASE("top-down proportions") {
  const Hierarchy h = test::tiny_tree();
  const std::vector<std::vector<double>> history{{8, 8}, {2, 2}, {6, 6}};
  const TdProportions p = td_proportions(h, history);
  CHECK(p.p(0) == 0.25);
  CHECK(p.p(1) == 0.75);
  CHECK_FALSE(p.uniform_fallback);

  const std::vector<std::vector<double>> equal{{6, 6}, {3, 3}, {3, 3}};
  CHECK(td_proportions(h, equal).p(0) == 0.5);

  const std::vector<std::vector<double>> zero{{0, 0}, {0, 0}, {0, 0}};
  const TdProportions z = td_proportions(h, zero);
  CHECK(z.uniform_fallback);
  CHECK(z.p(1) == 0.5);

  const Hierarchy m5 = Hierarchy::m5_store_template();
  std::vector<std::vector<double>> m5_hist(14, std::vector<double>(3, 1.0));
  m5_hist[0] = {10, 10, 10};
  const MappingMatrix g = g_top_down(m5, td_proportions(m5, m5_hist));
  CHECK(g.entries.rows() == 10);
  CHECK(g.entries.rightCols(13).isZero(0.0));
  CHECK(g.entries.col(0).isConstant(0.1, 1e-15));
}

TEST_CASE("structural mint on the smallest tree") {
  const MappingMatrix g = g_mint_structural(test::tiny_tree());
  Eigen::MatrixXd expected(2, 3);
  expected << 0.25, 0.75, -0.25, 0.25, -0.25, 0.75;
  CHECK(test::max_rel_diff(g.entries, expected) < 1e-12);
  CHECK(test::max_rel_diff(test::mint_oracle(summing_matrix(test::tiny_tree()).entries), expected) < 1e-12);
}

TEST_CASE("worked example") {
  const Hierarchy h = test::tiny_tree();
  const SummingMatrix s = summing_matrix(h);
  const Eigen::VectorXd base = vec({10, 4, 4});
  CHECK((reconcile(g_bottom_up(h), s, base) - vec({8, 4, 4})).norm() == 0.0);
  TdProportions half{vec({0.5, 0.5}), false};
  CHECK((reconcile(g_top_down(h, half), s, base) - vec({10, 5, 5})).norm() < 1e-12);
  CHECK((reconcile(g_mint_structural(h), s, base) - vec({9, 4.5, 4.5})).norm() < 1e-12);
  // Oracle path: S (explicit-inverse G) base.
  CHECK((s.entries * (test::mint_oracle(s.entries) * base) - vec({9, 4.5, 4.5})).norm() < 1e-12);
}

TEST_CASE("random trees: mint against the explicit-inverse oracle") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const Hierarchy h = test::build_random(rng, n);
    const SummingMatrix s = summing_matrix(h);
    const MappingMatrix g = g_mint_structural(h);
    CHECK(test::max_rel_diff(g.entries, test::mint_oracle(s.entries)) < 1e-8);
    const Eigen::MatrixXd gs = g.entries * s.entries;
    CHECK((gs - Eigen::MatrixXd::Identity(gs.rows(), gs.cols())).cwiseAbs().maxCoeff() < 1e-10);
    const double k = u(rng) * 7.0;
    CHECK((g_mint_structural(h, k).entries - g.entries).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("coherency, preservation and idempotence") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-50.0, 150.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
    const Hierarchy h = test::build_random(rng, n);
    const SummingMatrix s = summing_matrix(h);
    Eigen::VectorXd base(static_cast<Eigen::Index>(h.n_total()));
    for (Eigen::Index i = 0; i < base.size(); ++i) base(i) = u(rng);
    std::vector<std::vector<double>> history(h.n_total());
    Eigen::VectorXd hb(static_cast<Eigen::Index>(h.m_bottom()));
    for (Eigen::Index j = 0; j < hb.size(); ++j) hb(j) = std::fabs(u(rng)) + 1.0;
    const Eigen::VectorXd hy = aggregate_bottom(s, hb);
    for (std::size_t v = 0; v < h.n_total(); ++v) history[v] = {hy(static_cast<Eigen::Index>(v))};

    const MappingMatrix bu = g_bottom_up(h);
    const MappingMatrix td = g_top_down(h, td_proportions(h, history));
    const MappingMatrix mint = g_mint_structural(h);
    for (const MappingMatrix* g : {&bu, &td, &mint}) {
      const Eigen::VectorXd y = reconcile(*g, s, base);
      CHECK(coherence_check(s, y, 1e-9).coherent);
    }
    const Eigen::VectorXd ybu = reconcile(bu, s, base);
    for (std::size_t j = 0; j < h.m_bottom(); ++j) {
      const auto r = static_cast<Eigen::Index>(s.bottom_rows[j]);
      CHECK(ybu(r) == base(r));
    }
    CHECK(reconcile(td, s, base)(0) == doctest::Approx(base(0)).epsilon(1e-12));

    const Eigen::VectorXd ym = reconcile(mint, s, base);
    CHECK((reconcile(mint, s, ym) - ym).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + ym.cwiseAbs().maxCoeff()));
    CHECK((reconcile(mint, s, hy) - hy).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + hy.cwiseAbs().maxCoeff()));

    for (const MappingMatrix* g : {&bu, &mint}) {
      const Eigen::MatrixXd sgs = s.entries * g->entries * s.entries;
      CHECK((sgs - s.entries).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("top-down is not a projection in general") {
  const Hierarchy h = test::tiny_tree();
  const SummingMatrix s = summing_matrix(h);
  TdProportions p{vec({0.25, 0.75}), false};
  const Eigen::MatrixXd sgs = s.entries * g_top_down(h, p).entries * s.entries;
  CHECK((sgs - s.entries).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("reconcile input checks and flooring") {
  const Hierarchy h = test::tiny_tree();
  const SummingMatrix s = summing_matrix(h);
  const MappingMatrix mint = g_mint_structural(h);
  CHECK_THROWS_AS(reconcile(mint, s, vec({1, 2})), UserError);
  CHECK_THROWS_AS(reconcile(mint, s, vec({1, NAN, 2})), UserError);
  const Eigen::VectorXd neg = reconcile(mint, s, vec({0, 10, -10}));
  CHECK(neg.minCoeff() < 0.0);
  CHECK(reconcile(mint, s, vec({0, 10, -10}), true).minCoeff() >= 0.0);
  CHECK(parse_recon("MinT") == ReconMethod::kMinT);
  CHECK(parse_recon("bu") == ReconMethod::kBottomUp);
  CHECK_THROWS_AS(parse_recon("ols"), UserError);
}
