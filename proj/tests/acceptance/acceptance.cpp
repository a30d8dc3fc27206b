// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../support.hpp"
#include "htsf/data.hpp"
#include "htsf/evaluation.hpp"
#include "htsf/gbdt.hpp"
#include "htsf/reconcile.hpp"
#include "htsf/runner.hpp"
#include "htsf/scope.hpp"
#include "htsf/tweedie.hpp"

using namespace htsf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  return v;
}

Outcome reconciliation_coherency() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const Hierarchy h = test::build_random(rng, n);
    const SummingMatrix s = summing_matrix(h);
    const Eigen::VectorXd base = random_vector(rng, h.n_total(), -20.0, 100.0);
    const Eigen::VectorXd hist_bottom = random_vector(rng, h.m_bottom(), 0.0, 50.0);
    const Eigen::VectorXd hist = aggregate_bottom(s, hist_bottom);
    std::vector<std::vector<double>> history(h.n_total());
    for (std::size_t v = 0; v < h.n_total(); ++v) history[v] = {hist(static_cast<Eigen::Index>(v))};

    const Eigen::VectorXd bu = reconcile(g_bottom_up(h), s, base);
    const Eigen::VectorXd td = reconcile(g_top_down(h, td_proportions(h, history)), s, base);
    const Eigen::VectorXd mint = reconcile(g_mint_structural(h), s, base);
    bool ok = coherence_check(s, bu, 1e-9).coherent && coherence_check(s, td, 1e-9).coherent &&
              coherence_check(s, mint, 1e-9).coherent;
    for (std::size_t j = 0; j < h.m_bottom(); ++j) {
      const auto r = static_cast<Eigen::Index>(s.bottom_rows[j]);
      ok = ok && bu(r) == base(r);
    }
    ok = ok && std::fabs(td(0) - base(0)) <= 1e-12 * std::max(1.0, std::fabs(base(0)));
    if (!ok) ++failures;
  }
  const double secs = seconds_since(start);
  return {failures == 0 && secs < 5.0,
          std::to_string(failures) + " of 1000 pairs failed, " + fmt("%.2f s (limit 5 s)", secs)};
}

Outcome mint_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2002);
  double worst_oracle = 0.0, worst_idem = 0.0, worst_scale = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
    const Hierarchy h = test::build_random(rng, n);
    const SummingMatrix s = summing_matrix(h);
    const MappingMatrix g = g_mint_structural(h);
    worst_oracle = std::max(worst_oracle, test::max_rel_diff(g.entries, test::mint_oracle(s.entries)));
    const Eigen::VectorXd base = random_vector(rng, h.n_total(), -10.0, 10.0);
    const Eigen::VectorXd once = reconcile(g, s, base);
    worst_idem = std::max(worst_idem, (reconcile(g, s, once) - once).cwiseAbs().maxCoeff());
    const MappingMatrix scaled = g_mint_structural(h, 7.0);
    worst_scale = std::max(worst_scale, (scaled.entries - g.entries).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(start);
  return {worst_oracle <= 1e-8 && worst_idem <= 1e-9 && worst_scale <= 1e-12 && secs < 10.0,
          "oracle rel " + fmt("%.2e", worst_oracle) + ", idempotence " + fmt("%.2e", worst_idem) + ", k-scaling " +
              fmt("%.2e", worst_scale) + ", " + fmt("%.2f s", secs)};
}

Outcome worked_example() {
  const Hierarchy h = test::tiny_tree();
  const SummingMatrix s = summing_matrix(h);
  Eigen::VectorXd base(3);
  base << 10, 4, 4;
  auto oracle = [&](const Eigen::MatrixXd& g) { return Eigen::VectorXd(s.entries * (g * base)); };
  Eigen::MatrixXd g_bu(2, 3), g_td(2, 3);
  g_bu << 0, 1, 0, 0, 0, 1;
  g_td << 0.5, 0, 0, 0.5, 0, 0;
  TdProportions half{Eigen::Vector2d(0.5, 0.5), false};
  const Eigen::VectorXd bu = reconcile(g_bottom_up(h), s, base);
  const Eigen::VectorXd td = reconcile(g_top_down(h, half), s, base);
  const Eigen::VectorXd mint = reconcile(g_mint_structural(h), s, base);
  const Eigen::Vector3d want_bu(8, 4, 4), want_td(10, 5, 5), want_mint(9, 4.5, 4.5);
  const double err = std::max({(bu - want_bu).cwiseAbs().maxCoeff(), (td - want_td).cwiseAbs().maxCoeff(),
                               (mint - want_mint).cwiseAbs().maxCoeff(),
                               (oracle(g_bu) - want_bu).cwiseAbs().maxCoeff(),
                               (oracle(g_td) - want_td).cwiseAbs().maxCoeff(),
                               (oracle(test::mint_oracle(s.entries)) - want_mint).cwiseAbs().maxCoeff()});
  std::ostringstream d;
  d << "BU [" << bu.transpose() << "], TD [" << td.transpose() << "], MinT [" << mint.transpose()
    << "], max error " << fmt("%.1e", err);
  return {err <= 1e-12, d.str()};
}

Outcome tweedie_finite_differences() {
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> uy(0.0, 10.0);
  std::uniform_real_distribution<double> uf(-3.0, 3.0);
  const double rhos[] = {1.1, 1.5, 1.9};
  const double eps = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double y = uy(rng), f = uf(rng), rho = rhos[i % 3];
    const GradHess gh = tweedie_grad_hess(y, f, rho);
    const double fd_g = (tweedie_loss(y, f + eps, rho) - tweedie_loss(y, f - eps, rho)) / (2 * eps);
    const double fd_h =
        (tweedie_grad_hess(y, f + eps, rho).gradient - tweedie_grad_hess(y, f - eps, rho).gradient) / (2 * eps);
    worst = std::max(worst, std::fabs(fd_g - gh.gradient) / std::max(std::fabs(gh.gradient), 1e-300));
    worst = std::max(worst, std::fabs(fd_h - gh.hessian) / std::max(std::fabs(gh.hessian), 1e-300));
  }
  return {worst <= 1e-6, "worst relative deviation " + fmt("%.2e", worst) + " over 1000 samples"};
}

Outcome gbdt_sanity() {
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FeatureMatrix x(1000, 3);
  std::vector<double> y(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    for (std::size_t c = 0; c < 3; ++c) x(i, c) = u(rng);
    y[i] = x(i, 0) < 0.5 ? 1.0 : 3.0;
  }
  GbdtParams p;
  p.learning_rate = 0.1;
  p.num_rounds = 100;
  p.feature_fraction = 1.0;
  p.seed = 5;
  const GbdtModel one = gbdt_train(x, y, p, 1);
  const GbdtModel many = gbdt_train(x, y, p, 4);
  const std::vector<double> pred = gbdt_predict(one, x);
  double se = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) se += (pred[i] - y[i]) * (pred[i] - y[i]);
  const double rmse = std::sqrt(se / 1000.0);
  bool monotone = true;
  for (std::size_t r = 1; r < one.loss_history.size(); ++r) monotone = monotone && one.loss_history[r] <= one.loss_history[r - 1];
  const bool identical = gbdt_predict_raw(one, x) == gbdt_predict_raw(many, x);
  bool same_nodes = one.trees.size() == many.trees.size();
  for (std::size_t t = 0; same_nodes && t < one.trees.size(); ++t) {
    const auto& a = one.trees[t].nodes;
    const auto& b = many.trees[t].nodes;
    same_nodes = a.size() == b.size();
    for (std::size_t k = 0; same_nodes && k < a.size(); ++k) {
      same_nodes = a[k].feature == b[k].feature && a[k].threshold == b[k].threshold && a[k].value == b[k].value &&
                   a[k].left == b[k].left && a[k].right == b[k].right;
    }
  }
  return {rmse < 0.05 && monotone && identical && same_nodes,
          "RMSE " + fmt("%.4f", rmse) + ", loss non-increasing: " + (monotone ? "yes" : "no") +
              ", 1 vs 4 workers bit-identical: " + (identical && same_nodes ? "yes" : "no")};
}

Outcome embedding_counts() {
  SeriesFrame f{"H", "x", std::vector<double>(1941)};
  for (std::size_t t = 0; t < f.values.size(); ++t) f.values[t] = static_cast<double>(t);
  const EmbeddingMatrix em = build_embedding(f, 60, 1);
  const SplitSpec s = split_holdout(em, 28);
  return {em.rows() == 1880 && em.cols() == 62 && s.train_rows == 1852 && s.test_rows == 28,
          std::to_string(em.rows()) + " rows x " + std::to_string(em.cols()) + " columns, " +
              std::to_string(s.train_rows) + "/" + std::to_string(s.test_rows) + " split"};
}

Outcome metric_identities() {
  const std::vector<double> train{1, 2, 3, 4};
  const auto hand = mase(train, std::vector<double>{5}, std::vector<double>{4});
  const bool hand_ok = hand && *hand == 1.0;

  const std::vector<MaseScore> es{{"A", "t", EvalLevel::kTop, 2.6054},
                                  {"A", "m", EvalLevel::kMiddle, 1.2055},
                                  {"A", "b", EvalLevel::kBottom, 1.0412}};
  const std::string es_avg = format_half_up(avg_levels(es), 4);

  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MaseScore> scores;
    const int hierarchies = 1 + trial % 6;
    std::vector<std::array<std::vector<double>, 3>> by(static_cast<std::size_t>(hierarchies));
    for (int h = 0; h < hierarchies; ++h) {
      for (int v = 0; v < 14; ++v) {
        const int level = v == 0 ? 0 : (v < 4 ? 1 : 2);
        const double x = u(rng);
        scores.push_back({"H" + std::to_string(h), "n" + std::to_string(v), static_cast<EvalLevel>(level), x});
        by[static_cast<std::size_t>(h)][static_cast<std::size_t>(level)].push_back(x);
      }
    }
    double lv = 0.0, prod = 0.0;
    for (int level = 0; level < 3; ++level) {
      double over_h = 0.0;
      for (const auto& h : by) {
        double s = 0.0;
        for (double x : h[static_cast<std::size_t>(level)]) s += x;
        over_h += s / static_cast<double>(h[static_cast<std::size_t>(level)].size());
      }
      lv += over_h / hierarchies;
    }
    lv /= 3.0;
    for (const auto& h : by) {
      double s = 0.0;
      std::size_t c = 0;
      for (const auto& level : h) {
        for (double x : level) {
          s += x;
          ++c;
        }
      }
      prod += s / static_cast<double>(c);
    }
    prod /= hierarchies;
    worst = std::max({worst, std::fabs(avg_levels(scores) - lv), std::fabs(avg_products(scores) - prod)});
  }
  return {hand_ok && es_avg == "1.6174" && worst <= 1e-12,
          "hand MASE " + (hand ? fmt("%.17g", *hand) : std::string("undefined")) + ", ES AvgLevels " + es_avg +
              ", brute-force deviation " + fmt("%.1e", worst)};
}

Outcome mcb_checks() {
  std::vector<std::vector<double>> same(50, std::vector<double>(4, 2.0));
  const McbResult tie = mcb_test(same, {"a", "b", "c", "d"});
  bool tie_ok = true;
  for (double r : tie.mean_rank) tie_ok = tie_ok && r == 2.5;
  for (const auto& row : tie.overlap) {
    for (bool o : row) tie_ok = tie_ok && o;
  }

  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  std::vector<std::vector<double>> dom(100, std::vector<double>(4));
  for (auto& row : dom) {
    for (std::size_t k = 1; k < 4; ++k) row[k] = u(rng);
    row[0] = u(rng) - 1.0;
  }
  const McbResult d = mcb_test(dom, {"best", "b", "c", "d"});
  bool dom_ok = d.mean_rank[0] == 1.0 && d.best == 0;
  for (std::size_t k = 1; k < 4; ++k) dom_ok = dom_ok && d.hi[0] < d.lo[k];

  std::vector<std::vector<double>> ten(10, std::vector<double>(2));
  for (auto& row : ten) row = {u(rng), u(rng)};
  const McbResult two = mcb_test(ten, {"x", "y"});
  const double formula = 0.5 * 2.772 * std::sqrt(2.0 * 3.0 / (6.0 * 10.0));
  const bool hw_ok = std::fabs(two.half_width - formula) <= 1e-3 && std::fabs(two.half_width - 0.438) <= 1e-3;
  return {tie_ok && dom_ok && hw_ok, std::string("ties ") + (tie_ok ? "ok" : "bad") + ", dominating column " +
                                         (dom_ok ? "disjoint" : "overlapping") + ", k=2 N=10 half-width " +
                                         fmt("%.4f", two.half_width)};
}

struct ReplicationScores {
  double loc = 0.0, nfg = 0.0, fg = 0.0;
};

ReplicationScores replication(double sharing, std::uint64_t seed) {
  SynthSpec spec;
  spec.hierarchies = 8;
  spec.bottoms = 4;
  spec.groups = 2;
  spec.length = 300;
  spec.sharing = sharing;
  spec.seed = seed;
  const SynthData synth = synthesize(spec);
  const Dataset data = build_dataset(synth.panel, synth.hierarchy, 60, 28);

  ForecastOptions opt;
  opt.seed = seed;
  auto products = [&](ModelFamily family) {
    const BaseForecastResult r = produce_base_forecasts(family, data, opt);
    std::vector<MaseScore> scores;
    for (std::size_t h = 0; h < data.hierarchies.size(); ++h) {
      for (std::size_t v = 0; v < data.hierarchy.n_total(); ++v) {
        const SeriesForecast& s = r.forecasts.series[h * data.hierarchy.n_total() + v];
        scores.push_back({s.hierarchy_id, s.node_id, eval_level(data.hierarchy, v),
                          mase(data.training_values(h, v), s.actual, s.forecast)});
      }
    }
    return avg_products(scores);
  };
  return {products(ModelFamily::kGbdtLocal), products(ModelFamily::kGbdtPerHierarchy),
          products(ModelFamily::kGbdtGlobal)};
}

Outcome global_beats_local() {
  const auto start = Clock::now();
  int nfg_wins = 0, fg_wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ReplicationScores r = replication(0.8, seed);
    nfg_wins += r.nfg < r.loc;
    fg_wins += r.fg < r.loc;
  }
  int nfg_wins0 = 0, fg_wins0 = 0;
  const int zero_reps = 5;
  for (std::uint64_t seed = 101; seed < 101 + zero_reps; ++seed) {
    const ReplicationScores r = replication(0.0, seed);
    nfg_wins0 += r.nfg < r.loc;
    fg_wins0 += r.fg < r.loc;
  }
  const double secs = seconds_since(start);
  return {nfg_wins >= 14 && fg_wins >= 14 && secs < 600.0,
          "sharing 0.8: nfg < loc in " + std::to_string(nfg_wins) + "/20, fg < loc in " + std::to_string(fg_wins) +
              "/20 (need 14); sharing 0: " + std::to_string(nfg_wins0) + "/" + std::to_string(zero_reps) + " and " +
              std::to_string(fg_wins0) + "/" + std::to_string(zero_reps) + "; " + fmt("%.0f s (limit 600 s)", secs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / "htsf_acceptance_e2e";
  fs::remove_all(root);
  SynthSpec spec;
  spec.hierarchies = 4;
  spec.length = 150;
  spec.seed = 10;
  cmd_synth(spec, root / "data");
  nlohmann::json cfg;
  {
    std::ifstream in(root / "data" / "config.json");
    cfg = nlohmann::json::parse(in);
  }
  cfg["lags"] = 30;
  cfg["gbdt"] = {{"num_rounds", 40}};
  std::ofstream(root / "data" / "config.json") << cfg.dump(2);

  CliOverrides a{std::nullopt, root / "a", 1};
  CliOverrides b{std::nullopt, root / "b", 4};
  cmd_run(root / "data" / "config.json", a);
  cmd_run(root / "data" / "config.json", b);
  std::size_t identical = 0;
  const char* files[] = {"results_table.csv", "boxplot.csv", "mcb.csv"};
  for (const char* f : files) {
    const std::string x = slurp(root / "a" / f);
    identical += !x.empty() && x == slurp(root / "b" / f);
  }
  fs::remove_all(root);
  return {identical == 3, std::to_string(identical) + "/3 evaluation CSVs byte-identical across two runs (1 and 4 workers)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reconciliation coherency", reconciliation_coherency},
      {"MinT correctness", mint_correctness},
      {"worked example", worked_example},
      {"Tweedie derivatives", tweedie_finite_differences},
      {"GBDT sanity", gbdt_sanity},
      {"embedding counts", embedding_counts},
      {"metric identities", metric_identities},
      {"MCB", mcb_checks},
      {"pooled GBDT beats local GBDT", global_beats_local},
      {"end-to-end determinism", end_to_end_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("ACCEPTANCE %2zu %s  %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
