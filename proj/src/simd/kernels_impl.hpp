#pragma once

#include <cstddef>

namespace bilin::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void gemv_scalar(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
void syr_scalar(double* a, const double* u, double alpha, std::size_t n);
double quad_scalar(const double* a, const double* x, std::size_t n);

#if defined(BILIN_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void gemv_avx2(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
void syr_avx2(double* a, const double* u, double alpha, std::size_t n);
double quad_avx2(const double* a, const double* x, std::size_t n);
#endif

#if defined(BILIN_HAVE_NEON)
double dot_neon(const double* a, const double* b, std::size_t n);
void gemv_neon(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
void syr_neon(double* a, const double* u, double alpha, std::size_t n);
double quad_neon(const double* a, const double* x, std::size_t n);
#endif

}  // namespace bilin::simd::detail
