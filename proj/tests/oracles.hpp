#pragma once

// Test-only reference implementations. They use Eigen and plain brute force
// and share no numerical code with the library.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "prstab/frame.hpp"

namespace oracle {

inline Eigen::MatrixXd to_eigen(const prstab::Frame& f) {
  Eigen::MatrixXd m(f.dim(), f.count());
  for (std::size_t j = 0; j < f.count(); ++j)
    for (std::size_t i = 0; i < f.dim(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.column(j)[i];
  return m;
}

inline Eigen::MatrixXd columns(const Eigen::MatrixXd& f, std::uint64_t bits) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < f.cols(); ++j)
    if ((bits >> j) & 1U) idx.push_back(j);
  Eigen::MatrixXd out(f.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = f.col(idx[k]);
  return out;
}

/// sigma_n of an n x k matrix; 0 when k < n.
inline double sigma_n(const Eigen::MatrixXd& a) {
  if (a.cols() < a.rows()) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(a.rows() - 1);
}

inline int rank(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * s(0)) ++r;
  return r;
}

struct Bounds {
  double a, b;
};

inline Bounds frame_bounds(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * m.transpose());
  return {std::max(0.0, es.eigenvalues()(0)), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

/// All 2^m subsets, S and S^c both visited.
inline double delta(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  const std::uint64_t all = (std::uint64_t{1} << f.count()) - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s <= all; ++s) {
    const double a = sigma_n(columns(m, s)), b = sigma_n(columns(m, all ^ s));
    best = std::min(best, std::sqrt(a * a + b * b));
  }
  return best;
}

inline double omega(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  const int n = static_cast<int>(f.dim());
  const std::uint64_t all = (std::uint64_t{1} << f.count()) - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s <= all; ++s)
    if (rank(columns(m, all ^ s)) < n) best = std::min(best, sigma_n(columns(m, s)));
  return best;
}

/// Empty when no subset has rank n.
inline std::optional<double> tau(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  const int n = static_cast<int>(f.dim());
  const std::uint64_t all = (std::uint64_t{1} << f.count()) - 1;
  std::optional<double> best;
  for (std::uint64_t s = 1; s <= all; ++s) {
    const Eigen::MatrixXd c = columns(m, s);
    if (rank(c) == n) best = std::min(best.value_or(std::numeric_limits<double>::infinity()), sigma_n(c));
  }
  return best;
}

inline bool complement_property(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  const int n = static_cast<int>(f.dim());
  const std::uint64_t all = (std::uint64_t{1} << f.count()) - 1;
  for (std::uint64_t s = 0; s <= all; ++s)
    if (rank(columns(m, s)) < n && rank(columns(m, all ^ s)) < n) return false;
  return true;
}

inline bool full_spark(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  const int n = static_cast<int>(f.dim());
  const std::uint64_t all = (std::uint64_t{1} << f.count()) - 1;
  if (static_cast<int>(f.count()) < n) return false;
  for (std::uint64_t s = 0; s <= all; ++s)
    if (__builtin_popcountll(s) == n && rank(columns(m, s)) < n) return false;
  return true;
}

inline Eigen::MatrixXd r_matrix(const Eigen::MatrixXd& f, const Eigen::VectorXd& x) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(f.rows(), f.rows());
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    const double c = f.col(j).dot(x);
    r += c * c * f.col(j) * f.col(j).transpose();
  }
  return r;
}

/// Dense grid on [0, pi) followed by repeated zooming around the best point.
template <class Fn>
double grid_extremum(Fn&& fn, bool maximize, std::size_t points = 20000, int zooms = 6) {
  const double sign = maximize ? -1.0 : 1.0;
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  double h = std::numbers::pi / static_cast<double>(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = h * static_cast<double>(k);
    const double v = sign * fn(t);
    if (v < best) {
      best = v;
      arg = t;
    }
  }
  for (int z = 0; z < zooms; ++z) {
    const double lo = arg - h;
    h = 2.0 * h / 200.0;
    for (int k = 0; k <= 200; ++k) {
      const double t = lo + h * k;
      const double v = sign * fn(t);
      if (v < best) {
        best = v;
        arg = t;
      }
    }
  }
  return sign * best;
}

/// a0 for n = 2 by angle grid.
inline double a0_grid(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  return grid_extremum(
      [&](double t) {
        Eigen::Vector2d x(std::cos(t), std::sin(t));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r_matrix(m, x));
        return es.eigenvalues()(0);
      },
      false);
}

/// Lambda_F^4 = max sum <x,f>^4 for n = 2 by angle grid.
inline double lambda4_grid(const prstab::Frame& f) {
  const Eigen::MatrixXd m = to_eigen(f);
  return grid_extremum(
      [&](double t) {
        Eigen::Vector2d x(std::cos(t), std::sin(t));
        double s = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += std::pow(m.col(j).dot(x), 4);
        return s;
      },
      true);
}

/// Mercedes-Benz frame: unit vectors at 90, 210, 330 degrees.
inline prstab::Frame mb3() {
  std::vector<prstab::Vector> cols;
  for (double deg : {90.0, 210.0, 330.0}) {
    const double t = deg * std::numbers::pi / 180.0;
    cols.push_back({std::cos(t), std::sin(t)});
  }
  return prstab::Frame::from_columns(cols);
}

}  // namespace oracle
