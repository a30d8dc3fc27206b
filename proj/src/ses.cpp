#include "htsf/ses.hpp"

#include <limits>
#include <string>

#include "htsf/error.hpp"

namespace htsf {
namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw UserError("ses: alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

}  // namespace

double ses_forecast(std::span<const double> history, double alpha) {
  check_alpha(alpha);
  if (history.empty()) throw UserError("ses: empty history");
  double level = history.front();
  for (double y : history.subspan(1)) level = alpha * y + (1.0 - alpha) * level;
  return level;
}

SesParams ses_fit(std::span<const double> history) {
  if (history.size() < 3) throw UserError("ses: history needs at least 3 points");
  SesParams best{0.01};
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 99; ++k) {
    const double alpha = k / 100.0;
    double level = history.front();
    double sse = 0.0;
    for (double y : history.subspan(1)) {
      const double err = y - level;
      sse += err * err;
      level = alpha * y + (1.0 - alpha) * level;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best.alpha = alpha;
    }
  }
  return best;
}

}  // namespace htsf
