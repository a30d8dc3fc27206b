#include <atomic>
#include <cstdlib>
#include <string>

#include "htsf/error.hpp"
#include "htsf/kernels.hpp"

namespace htsf::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("HTSF_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::kScalar;
  }
  return isa_supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if HTSF_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw UserError("instruction set not supported on this CPU: " + std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

#if HTSF_HAVE_AVX2_KERNELS
#define HTSF_DISPATCH(fn, ...) \
  (active_isa() == Isa::kAvx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define HTSF_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  return HTSF_DISPATCH(sum_abs_diff, a, b);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return HTSF_DISPATCH(dot, a, b);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  HTSF_DISPATCH(axpy, alpha, x, y);
}

void exp(std::span<const double> x, std::span<double> out) { HTSF_DISPATCH(exp, x, out); }

void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess) {
  HTSF_DISPATCH(tweedie_grad_hess, y, score, rho, grad, hess);
}

double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho) {
  return HTSF_DISPATCH(tweedie_loss_sum, y, score, rho);
}

#undef HTSF_DISPATCH

}  // namespace htsf::kernels
