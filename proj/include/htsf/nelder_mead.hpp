#pragma once

#include <functional>
#include <span>
#include <vector>

namespace htsf {

struct NelderMeadOptions {
  int max_iterations = 500;
  // Stop once 2|f_worst - f_best| <= tol * (|f_worst| + |f_best|) + tiny.
  double tolerance = 1e-8;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Derivative-free downhill simplex (reflection 1, expansion 2, contraction
// 0.5, shrink 0.5). `steps` gives the initial simplex offset per coordinate.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, std::span<const double> steps,
                             const NelderMeadOptions& options = {});

}  // namespace htsf
