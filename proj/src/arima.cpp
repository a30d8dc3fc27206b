#include "htsf/arima.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "htsf/error.hpp"

namespace htsf {
namespace {

void check_order(const ArimaOrder& order) {
  if (order.p < 0 || order.d < 0 || order.q < 0) throw UserError("arima: order terms must be non-negative");
}

// Residuals of the recursion; returns the CSS and leaves the residual tail in `e`.
double residuals(std::span<const double> w, std::span<const double> phi, std::span<const double> theta,
                 double constant, std::vector<double>& e) {
  const std::size_t p = phi.size();
  const std::size_t q = theta.size();
  e.assign(w.size(), 0.0);
  double css = 0.0;
  for (std::size_t t = p; t < w.size(); ++t) {
    double pred = constant;
    for (std::size_t i = 1; i <= p; ++i) pred += phi[i - 1] * w[t - i];
    for (std::size_t j = 1; j <= q && j <= t; ++j) pred += theta[j - 1] * e[t - j];
    e[t] = w[t] - pred;
    css += e[t] * e[t];
  }
  return css;
}

}  // namespace

std::vector<double> difference(std::span<const double> x, int d) {
  std::vector<double> out(x.begin(), x.end());
  for (int k = 0; k < d; ++k) {
    if (out.size() < 2) return {};
    for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
    out.pop_back();
  }
  return out;
}

double conditional_sum_of_squares(std::span<const double> w, std::span<const double> phi,
                                  std::span<const double> theta, double constant) {
  std::vector<double> e;
  return residuals(w, phi, theta, constant, e);
}

ArimaModel arima_fit(std::span<const double> history, ArimaOrder order, const NelderMeadOptions& options) {
  check_order(order);
  const std::size_t p = static_cast<std::size_t>(order.p);
  const std::size_t q = static_cast<std::size_t>(order.q);
  const std::size_t min_len = p + q + static_cast<std::size_t>(order.d) + 2;
  if (history.size() < min_len) {
    throw UserError("arima: history length " + std::to_string(history.size()) + " below minimum " +
                    std::to_string(min_len));
  }
  const std::vector<double> w = difference(history, order.d);
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(w.size()));

  // Parameter vector layout: [phi_1..phi_p, theta_1..theta_q, constant].
  std::vector<double> x0(p + q + 1, 0.0);
  x0.back() = mean;
  std::vector<double> steps(p + q + 1, 0.1);
  steps.back() = 0.1 * std::max(sd, 1e-6);

  std::vector<double> e;
  auto objective = [&](std::span<const double> x) {
    return residuals(w, x.subspan(0, p), x.subspan(p, q), x[p + q], e);
  };
  const NelderMeadResult fit = nelder_mead(objective, x0, steps, options);
  if (!std::isfinite(fit.value)) throw UserError("arima: non-finite conditional sum of squares");

  ArimaModel model;
  model.order = order;
  model.phi.assign(fit.x.begin(), fit.x.begin() + static_cast<std::ptrdiff_t>(p));
  model.theta.assign(fit.x.begin() + static_cast<std::ptrdiff_t>(p),
                     fit.x.begin() + static_cast<std::ptrdiff_t>(p + q));
  model.constant = fit.x.back();
  model.sigma2 = fit.value / static_cast<double>(w.size() - p);
  return model;
}

double arima_forecast(const ArimaModel& model, std::span<const double> history) {
  check_order(model.order);
  const std::vector<double> w = difference(history, model.order.d);
  const std::size_t p = model.phi.size();
  const std::size_t q = model.theta.size();
  if (w.size() < p) throw UserError("arima: history too short to forecast");

  std::vector<double> e;
  residuals(w, model.phi, model.theta, model.constant, e);
  const std::size_t n = w.size();
  double next = model.constant;
  for (std::size_t i = 1; i <= p; ++i) next += model.phi[i - 1] * w[n - i];
  for (std::size_t j = 1; j <= q && j <= n; ++j) next += model.theta[j - 1] * e[n - j];

  // x^(k)_{n+1} = x^(k+1)_{n+1} + x^(k)_n for k = d-1 .. 0.
  for (int k = model.order.d - 1; k >= 0; --k) {
    const std::vector<double> level = difference(history, k);
    next += level.back();
  }
  return next;
}

}  // namespace htsf
