#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// htsf::kernels::scalar and, on x86-64, an AVX2+FMA variant in
// htsf::kernels::avx2. The unqualified entry points dispatch at runtime to the
// widest variant the CPU supports; HTSF_SIMD=scalar forces the reference path.
//
// Variants are not bit-identical to each other (reductions use different
// association), but each variant is deterministic for a given input.

#include <span>
#include <string_view>

namespace htsf::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Overrides the dispatch target; throws UserError if the CPU lacks `isa`.
void force_isa(Isa isa);

// Σ |a_i - b_i|
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
// Σ a_i b_i
double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// out_i = exp(x_i)
void exp(std::span<const double> x, std::span<double> out);
// Tweedie gradient and hessian with respect to the raw (log-link) score.
void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess);
// Σ tweedie_loss(y_i, score_i)
double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho);

namespace scalar {
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void exp(std::span<const double> x, std::span<double> out);
void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess);
double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define HTSF_HAVE_AVX2_KERNELS 1
namespace avx2 {
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void exp(std::span<const double> x, std::span<double> out);
void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess);
double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho);
}  // namespace avx2
#else
#define HTSF_HAVE_AVX2_KERNELS 0
#endif

}  // namespace htsf::kernels
