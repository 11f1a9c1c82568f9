#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace bilin::simd::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_neon(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void syr_neon(double* a, const double* u, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ss = alpha * u[i];
    const float64x2_t s = vdupq_n_f64(ss);
    double* row = a + i * n;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) vst1q_f64(row + j, vfmaq_f64(vld1q_f64(row + j), s, vld1q_f64(u + j)));
    for (; j < n; ++j) row[j] += ss * u[j];
  }
}

double quad_neon(const double* a, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * dot_neon(a + i * n, x, n);
  return s;
}

}  // namespace bilin::simd::detail
