#include "bilin/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "bilin/error.hpp"
#include "bilin/simd/kernels.hpp"

namespace bilin {

Matrix Matrix::identity(std::size_t n, double scale) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "dot: length mismatch");
  return simd::active().dot(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorCode::DimensionMismatch, "matvec: length mismatch");
  std::vector<double> y(a.rows());
  simd::active().gemv(a.data(), x.data(), y.data(), a.rows(), a.cols());
  return y;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "multiply: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

std::optional<Matrix> cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::DimensionMismatch, "cholesky: matrix not square");
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double log_det_spd(const Matrix& a) {
  auto l = cholesky(a);
  if (!l) throw Error(ErrorCode::DimensionMismatch, "log_det_spd: matrix is not positive definite");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += std::log((*l)(i, i));
  return 2.0 * s;
}

Matrix inverse_spd(const Matrix& a) {
  auto maybe_l = cholesky(a);
  if (!maybe_l) throw Error(ErrorCode::DimensionMismatch, "inverse_spd: matrix is not positive definite");
  const Matrix& l = *maybe_l;
  const std::size_t n = a.rows();
  // Invert L by forward substitution, then A^{-1} = L^{-T} L^{-1}.
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k < n; ++k) s += linv(k, i) * linv(k, j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

std::size_t numerical_rank(Matrix a, double tol) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
    }
    if (std::abs(a(pivot, c)) <= tol) continue;
    if (pivot != rank) {
      for (std::size_t k = 0; k < cols; ++k) std::swap(a(pivot, k), a(rank, k));
    }
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const double f = a(r, c) / a(rank, c);
      if (f == 0.0) continue;
      for (std::size_t k = c; k < cols; ++k) a(r, k) -= f * a(rank, k);
    }
    ++rank;
  }
  return rank;
}

}  // namespace bilin
