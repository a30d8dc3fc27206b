#pragma once

#include <span>
#include <vector>

#include "htsf/nelder_mead.hpp"

namespace htsf {

struct ArimaOrder {
  int p = 1;
  int d = 1;
  int q = 1;
};

// w_t = c + sum_i phi_i w_{t-i} + e_t + sum_j theta_j e_{t-j} on the
// d-times differenced series w.
struct ArimaModel {
  ArimaOrder order;
  std::vector<double> phi;
  std::vector<double> theta;
  double constant = 0.0;
  double sigma2 = 0.0;
};

std::vector<double> difference(std::span<const double> x, int d);

// Conditional sum of squares for the given coefficients on an already
// differenced series; residuals before the first AR-complete index are zero.
double conditional_sum_of_squares(std::span<const double> w, std::span<const double> phi,
                                  std::span<const double> theta, double constant);

// Minimises the CSS with a Nelder-Mead simplex started at phi = theta = 0,
// constant = mean of the differenced series.
ArimaModel arima_fit(std::span<const double> history, ArimaOrder order = {},
                     const NelderMeadOptions& options = {});

// One-step conditional expectation; differencing is undone by summation.
double arima_forecast(const ArimaModel& model, std::span<const double> history);

}  // namespace htsf
