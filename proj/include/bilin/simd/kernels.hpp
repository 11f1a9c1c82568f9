#pragma once

#include <cstddef>

// Dense kernels with a portable scalar reference and vectorized variants.
// The active table is picked once at runtime from CPU features; set
// BILIN_SIMD=scalar to force the reference path.

namespace bilin::simd {

enum class Isa { scalar, avx2, neon };

struct Kernels {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = A x with A row-major rows x cols.
  void (*gemv)(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
  // A += alpha * u u^T on a full row-major n x n matrix.
  void (*syr)(double* a, const double* u, double alpha, std::size_t n);
  // x^T A x on a full row-major n x n matrix.
  double (*quad)(const double* a, const double* x, std::size_t n);
};

const Kernels& scalar_kernels() noexcept;

// nullptr when the variant was not compiled in or the CPU lacks it.
const Kernels* kernels_for(Isa isa) noexcept;

const Kernels& active() noexcept;

const char* isa_name(Isa isa) noexcept;

}  // namespace bilin::simd
