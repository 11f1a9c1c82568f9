#include <immintrin.h>

#include "kernels_impl.hpp"

namespace bilin::simd::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_avx2(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void syr_avx2(double* a, const double* u, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const __m256d s = _mm256_set1_pd(alpha * u[i]);
    double* row = a + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      _mm256_storeu_pd(row + j, _mm256_fmadd_pd(s, _mm256_loadu_pd(u + j), _mm256_loadu_pd(row + j)));
    }
    const double ss = alpha * u[i];
    for (; j < n; ++j) row[j] += ss * u[j];
  }
}

double quad_avx2(const double* a, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * dot_avx2(a + i * n, x, n);
  return s;
}

}  // namespace bilin::simd::detail
