#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace prstab {

using Vector = std::vector<double>;

/// Dense row-major matrix. Sizes are small (n up to a few dozen), so no
/// attempt is made at blocking or expression templates.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);
  /// Builds a matrix from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector column(std::size_t c) const;

  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);
Matrix operator*(double s, const Matrix& a);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
Vector normalized(std::span<const double> a);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);  // alpha*x + y
Vector scaled(double alpha, std::span<const double> x);

double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double trace(const Matrix& m);

/// Eigen-decomposition of a symmetric matrix. Eigenvalues are sorted
/// non-increasing; column i of `vectors` belongs to `values[i]`.
struct SymEigen {
  Vector values;
  Matrix vectors;

  Vector vector(std::size_t i) const { return vectors.column(i); }
};

/// Cyclic Jacobi eigensolver. Rejects input that is not symmetric within
/// 1e-12 * ||M||_F entrywise; throws NumericalError if the off-diagonal mass
/// is still above 1e-14 * ||M||_F after 100 sweeps.
SymEigen sym_eig(const Matrix& m);

/// Singular values of an arbitrary matrix, non-increasing, length
/// min(rows, cols). One-sided Jacobi, so small singular values keep
/// relative accuracy (rank decisions rely on this).
Vector singular_values(const Matrix& a);

/// Relative threshold used for every rank decision: sigma_i > 1e-10 * sigma_1.
inline constexpr double kRankTolerance = 1e-10;

std::size_t numerical_rank(std::span<const double> singular_values_desc);
std::size_t numerical_rank(const Matrix& a);

/// Unit vector c with M c = 0 for a matrix with more columns than rows.
/// Householder QR of M^T; the sign is fixed so that the first entry of
/// largest magnitude is positive.
Vector null_vector(const Matrix& m);

/// Symmetric inverse through the eigen-decomposition. Throws NumericalError
/// when lambda_min <= rel_tol * lambda_max.
Matrix sym_inverse(const Matrix& m, double rel_tol = 1e-12);

}  // namespace prstab
