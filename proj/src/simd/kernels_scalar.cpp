#include "kernels_impl.hpp"

namespace bilin::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot_scalar(a + i * cols, x, cols);
}

void syr_scalar(double* a, const double* u, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = alpha * u[i];
    double* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += s * u[j];
  }
}

double quad_scalar(const double* a, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * dot_scalar(a + i * n, x, n);
  return s;
}

}  // namespace bilin::simd::detail
