#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bilin {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n, double scale = 1.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Lower-triangular L with A = L L^T, or nullopt if A is not numerically SPD.
std::optional<Matrix> cholesky(const Matrix& a);
double log_det_spd(const Matrix& a);
Matrix inverse_spd(const Matrix& a);

// Rank by Gaussian elimination with partial pivoting, pivots below tol treated as zero.
std::size_t numerical_rank(Matrix a, double tol = 1e-9);

}  // namespace bilin
