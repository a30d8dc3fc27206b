#include "htsf/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "htsf/error.hpp"

namespace htsf {
namespace {

double sanitize(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, std::span<const double> steps,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (steps.size() != n) throw UserError("nelder_mead: step vector length mismatch");
  if (n == 0) return {x0, sanitize(objective(x0)), 0, true};

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> f(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) f[i] = sanitize(objective(simplex[i]));

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto point = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
  };

  NelderMeadResult result;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Stable on ties so the original point stays "best" when nothing improves.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    const double fb = f[best];
    const double fw = f[worst];
    if (std::isfinite(fw) &&
        2.0 * std::fabs(fw - fb) <= options.tolerance * (std::fabs(fw) + std::fabs(fb)) + 1e-300) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    point(-1.0, simplex[worst], trial);
    const double fr = sanitize(objective(trial));
    if (fr < fb) {
      point(-2.0, simplex[worst], trial2);
      const double fe = sanitize(objective(trial2));
      if (fe < fr) {
        simplex[worst] = trial2;
        f[worst] = fe;
      } else {
        simplex[worst] = trial;
        f[worst] = fr;
      }
    } else if (fr < f[second]) {
      simplex[worst] = trial;
      f[worst] = fr;
    } else {
      const bool outside = fr < fw;
      point(outside ? -0.5 : 0.5, simplex[worst], trial2);
      const double fc = sanitize(objective(trial2));
      if (fc < (outside ? fr : fw)) {
        simplex[worst] = trial2;
        f[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t k = 0; k < n; ++k) {
            simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
          }
          f[i] = sanitize(objective(simplex[i]));
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (f[i] < f[best]) best = i;
  }
  result.x = simplex[best];
  result.value = f[best];
  result.iterations = it;
  return result;
}

}  // namespace htsf
