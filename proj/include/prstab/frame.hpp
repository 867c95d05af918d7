#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prstab/linalg.hpp"

namespace prstab {

/// A subset S of the column indices {0, ..., m-1}. Printed and compared as a
/// bit string where index 0 is the least significant bit, so "smallest
/// subset" means smallest binary value.
class SubsetMask {
 public:
  SubsetMask() = default;
  explicit SubsetMask(std::size_t universe);

  static SubsetMask from_indices(std::size_t universe, std::span<const std::size_t> indices);
  /// Low `universe` bits of `bits`; universe must be <= 64.
  static SubsetMask from_bits(std::size_t universe, std::uint64_t bits);

  std::size_t universe() const { return universe_; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool contains(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  void insert(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void erase(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  void toggle(std::size_t i) { words_[i / 64] ^= std::uint64_t{1} << (i % 64); }

  SubsetMask complement() const;
  std::vector<std::size_t> indices() const;
  bool is_subset_of(const SubsetMask& other) const;

  /// '0'/'1' per index, index 0 first.
  std::string to_string() const;

  bool operator==(const SubsetMask&) const = default;
  /// Numeric order of the bit pattern (index 0 least significant).
  bool operator<(const SubsetMask& other) const;

 private:
  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

/// n x m real frame matrix, stored column by column.
class Frame {
 public:
  /// Throws InvalidArgument on empty dimensions or non-finite entries.
  explicit Frame(const Matrix& columns_as_matrix);
  static Frame from_columns(const std::vector<Vector>& columns);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return count_; }

  std::span<const double> column(std::size_t j) const { return {data_.data() + j * dim_, dim_}; }
  Matrix matrix() const;

  double column_norm(std::size_t j) const { return norm(column(j)); }
  double max_column_norm() const;

  /// n x |S| matrix of the selected columns.
  Matrix submatrix(std::span<const std::size_t> indices) const;
  /// F_S F_S^T.
  Matrix gram(std::span<const std::size_t> indices) const;
  Matrix gram() const;

  /// F^T x.
  Vector coefficients(std::span<const double> x) const;

  Frame scaled(double factor) const;
  /// Copy with column j replaced.
  Frame with_column(std::size_t j, std::span<const double> v) const;
  /// Copy keeping only the listed columns, in order.
  Frame select(std::span<const std::size_t> indices) const;

  bool operator==(const Frame&) const = default;

 private:
  Frame(std::size_t n, std::size_t m, std::vector<double> data);

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;
};

struct FrameBounds {
  double lower = 0.0;  // A = lambda_min(F F^T)
  double upper = 0.0;  // B = lambda_max(F F^T)
};

/// Spectrum of F_S F_S^T.
struct SpectralSummary {
  Vector eigenvalues;  // non-increasing, negative roundoff clamped to 0
  double lower = 0.0;  // A[S]
  double sigma_min = 0.0;
};

/// A = lambda_min(FF^T), B = lambda_max(FF^T). A = 0 flags a non-frame.
FrameBounds frame_bounds(const Frame& f);

SpectralSummary subset_spectrum(const Frame& f, const SubsetMask& s);

/// sigma_n(F_S); zero when |S| < n.
double subset_sigma_n(const Frame& f, std::span<const std::size_t> indices);
std::size_t subset_rank(const Frame& f, std::span<const std::size_t> indices);

/// |<x, f_j>| for every column.
Vector analysis_map(const Frame& f, std::span<const double> x);
/// |<x, f_j>|^2 for every column.
Vector analysis_map_sq(const Frame& f, std::span<const double> x);

/// min(||x - y||, ||x + y||).
double dist_d(std::span<const double> x, std::span<const double> y);

/// Nuclear norm of x x^T - y y^T as the sum of absolute eigenvalues.
double dist_d1_spectral(std::span<const double> x, std::span<const double> y);
/// Same quantity as ||x - y|| * ||x + y||.
double dist_d1_factored(std::span<const double> x, std::span<const double> y);
/// Evaluates both routes and throws NumericalError if they differ by more
/// than 1e-9 (relative to max(1, ||x||^2 + ||y||^2)).
double dist_d1(std::span<const double> x, std::span<const double> y);

/// Throws InvalidArgument unless x has length n.
void require_dim(const Frame& f, std::span<const double> x, const char* what);

}  // namespace prstab
