#include "htsf/tweedie.hpp"

#include <cmath>
#include <string>

#include "htsf/error.hpp"

namespace htsf {

void check_tweedie_power(double rho) {
  if (!(rho > 1.0 && rho < 2.0)) {
    throw UserError("tweedie: power must satisfy 1 < rho < 2, got " + std::to_string(rho));
  }
}

double tweedie_loss(double y, double score, double rho) {
  check_tweedie_power(rho);
  if (y < 0.0) throw UserError("tweedie: negative target");
  const double a = 1.0 - rho;
  const double b = 2.0 - rho;
  return -y * std::exp(a * score) / a + std::exp(b * score) / b;
}

GradHess tweedie_grad_hess(double y, double score, double rho) {
  check_tweedie_power(rho);
  if (y < 0.0) throw UserError("tweedie: negative target");
  const double a = 1.0 - rho;
  const double b = 2.0 - rho;
  const double ea = std::exp(a * score);
  const double eb = std::exp(b * score);
  return {-y * ea + eb, -y * a * ea + b * eb};
}

}  // namespace htsf
