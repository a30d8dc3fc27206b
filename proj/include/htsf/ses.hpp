#pragma once

#include <span>

namespace htsf {

struct SesParams {
  double alpha = 0.5;
};

// One-step forecast from y_hat_{t+1} = alpha*y_t + (1-alpha)*y_hat_t with
// y_hat_1 = y_1.
double ses_forecast(std::span<const double> history, double alpha);

// Alpha on the grid {0.01, ..., 0.99} minimising the in-sample one-step SSE;
// ties go to the smaller alpha.
SesParams ses_fit(std::span<const double> history);

}  // namespace htsf
