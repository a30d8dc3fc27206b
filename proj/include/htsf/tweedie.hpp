#pragma once

namespace htsf {

struct GradHess {
  double gradient = 0.0;
  double hessian = 0.0;
};

// Tweedie deviance-derived loss on the log-link raw score F:
//   L(y, F) = -y e^{(1-rho)F} / (1-rho) + e^{(2-rho)F} / (2-rho),  1 < rho < 2.
double tweedie_loss(double y, double score, double rho);
GradHess tweedie_grad_hess(double y, double score, double rho);

void check_tweedie_power(double rho);

}  // namespace htsf
