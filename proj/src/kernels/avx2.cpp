// Compiled with -mavx2 -mfma; only reached through dispatch after a CPUID check.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "htsf/kernels.hpp"

namespace htsf::kernels::avx2 {
namespace {

constexpr std::size_t kLanes = 4;

double hsum(__m256d v) {
  // Fixed association: (l0 + l2) + (l1 + l3).
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(pair, pair);
  return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

// exp(x) = 2^n * exp(r), |r| <= ln2/2, with a degree-13 Taylor polynomial.
// Inputs are clamped to [-708, 709] so 2^n stays a normal double.
__m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(709.0));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double kInvFact[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
      1.0,                1.0};
  __m256d p = _mm256_set1_pd(kInvFact[0]);
  for (std::size_t k = 1; k < std::size(kInvFact); ++k) {
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kInvFact[k]));
  }

  // 2^n built directly in the exponent field: bits = (n + 1023) << 52.
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  const __m256d biased = _mm256_add_pd(_mm256_add_pd(n, _mm256_set1_pd(1023.0)), magic);
  __m256i bits = _mm256_sub_epi64(_mm256_castpd_si256(biased), _mm256_castpd_si256(magic));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
}

}  // namespace

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, d));
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += std::fabs(a[i] - b[i]);
  return total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i), acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const __m256d va = _mm256_set1_pd(alpha);
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    _mm256_storeu_pd(y.data() + i, vy);
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void exp(std::span<const double> x, std::span<double> out) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(out.data() + i, exp_pd(_mm256_loadu_pd(x.data() + i)));
  }
  if (i < n) {
    alignas(32) double tail_in[kLanes] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double tail_out[kLanes];
    for (std::size_t j = i; j < n; ++j) tail_in[j - i] = x[j];
    _mm256_store_pd(tail_out, exp_pd(_mm256_load_pd(tail_in)));
    for (std::size_t j = i; j < n; ++j) out[j] = tail_out[j - i];
  }
}

namespace {

// Loads up to four lanes, zero-filling past `count`.
__m256d load_partial(const double* p, std::size_t count) {
  alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < count; ++j) buf[j] = p[j];
  return _mm256_load_pd(buf);
}

}  // namespace

void tweedie_grad_hess(std::span<const double> y, std::span<const double> score, double rho,
                       std::span<double> grad, std::span<double> hess) {
  const __m256d a = _mm256_set1_pd(1.0 - rho);
  const __m256d b = _mm256_set1_pd(2.0 - rho);
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; i += kLanes) {
    const std::size_t count = n - i < kLanes ? n - i : kLanes;
    const __m256d vy = load_partial(y.data() + i, count);
    const __m256d vf = load_partial(score.data() + i, count);
    const __m256d ea = exp_pd(_mm256_mul_pd(a, vf));
    const __m256d eb = exp_pd(_mm256_mul_pd(b, vf));
    const __m256d g = _mm256_fnmadd_pd(vy, ea, eb);
    const __m256d h = _mm256_fnmadd_pd(_mm256_mul_pd(vy, a), ea, _mm256_mul_pd(b, eb));
    alignas(32) double gbuf[kLanes];
    alignas(32) double hbuf[kLanes];
    _mm256_store_pd(gbuf, g);
    _mm256_store_pd(hbuf, h);
    for (std::size_t j = 0; j < count; ++j) {
      grad[i + j] = gbuf[j];
      hess[i + j] = hbuf[j];
    }
  }
}

double tweedie_loss_sum(std::span<const double> y, std::span<const double> score, double rho) {
  const double a_s = 1.0 - rho;
  const double b_s = 2.0 - rho;
  const __m256d a = _mm256_set1_pd(a_s);
  const __m256d b = _mm256_set1_pd(b_s);
  const __m256d inv_a = _mm256_set1_pd(1.0 / a_s);
  const __m256d inv_b = _mm256_set1_pd(1.0 / b_s);
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n = y.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vy = _mm256_loadu_pd(y.data() + i);
    const __m256d vf = _mm256_loadu_pd(score.data() + i);
    const __m256d ea = exp_pd(_mm256_mul_pd(a, vf));
    const __m256d eb = exp_pd(_mm256_mul_pd(b, vf));
    const __m256d term = _mm256_fnmadd_pd(_mm256_mul_pd(vy, inv_a), ea, _mm256_mul_pd(eb, inv_b));
    acc = _mm256_add_pd(acc, term);
  }
  double total = hsum(acc);
  for (; i < n; ++i) {
    total += -y[i] * std::exp(a_s * score[i]) / a_s + std::exp(b_s * score[i]) / b_s;
  }
  return total;
}

}  // namespace htsf::kernels::avx2
