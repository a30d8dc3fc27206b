#include <cmath>
#include <cstddef>

#include "htsf/kernels.hpp"

namespace htsf::kernels::scalar {

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a[i] - b[i]);
  return acc;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void exp(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
}

void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess) {
  const double a = 1.0 - rho;
  const double b = 2.0 - rho;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double ea = std::exp(a * score[i]);
    const double eb = std::exp(b * score[i]);
    grad[i] = -y[i] * ea + eb;
    hess[i] = -y[i] * a * ea + b * eb;
  }
}

double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho) {
  const double a = 1.0 - rho;
  const double b = 2.0 - rho;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += -y[i] * std::exp(a * score[i]) / a + std::exp(b * score[i]) / b;
  }
  return acc;
}

}  // namespace htsf::kernels::scalar
