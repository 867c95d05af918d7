#include "prstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "prstab/error.hpp"

namespace prstab {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw InvalidArgument("Matrix::from_rows: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(r * m.cols()));
  }
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidArgument("matrix-vector product: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
  return r;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("matrix sum: shape mismatch");
  Matrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) { return a + (-1.0) * b; }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector normalized(std::span<const double> a) {
  const double nrm = norm(a);
  Vector v(a.begin(), a.end());
  if (nrm > 0.0)
    for (double& x : v) x /= nrm;
  return v;
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("axpy: dimension mismatch");
  Vector r(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
  return r;
}

Vector scaled(double alpha, std::span<const double> x) {
  Vector r(x.begin(), x.end());
  for (double& v : r) v *= alpha;
  return r;
}

double frobenius_norm(const Matrix& m) { return norm(m.data()); }

double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.data()) r = std::max(r, std::abs(v));
  return r;
}

double trace(const Matrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

namespace {

double off_diagonal_mass(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymEigen sym_eig(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw InvalidArgument("sym_eig: matrix is not square");
  const double scale = frobenius_norm(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale) {
        std::ostringstream os;
        os << "sym_eig: matrix is not symmetric at (" << i << "," << j << "): " << m(i, j) << " vs " << m(j, i);
        throw InvalidArgument(os.str());
      }

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  constexpr int kMaxSweeps = 100;
  const double target = 1e-14 * scale;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_mass(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(p, k);
          const double akq = a(q, k);
          a(p, k) = c * akp - s * akq;
          a(q, k) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps && off_diagonal_mass(a) > target) {
    std::ostringstream os;
    os << "sym_eig: no convergence after " << kMaxSweeps << " sweeps, residual off-diagonal mass "
       << off_diagonal_mass(a) << " (target " << target << ")";
    throw NumericalError(os.str());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

Vector singular_values(const Matrix& a) {
  // Orthogonalize the columns of W, where W = A^T when A is wide so that the
  // number of rotated columns is min(rows, cols).
  const bool wide = a.cols() > a.rows();
  const std::size_t len = wide ? a.cols() : a.rows();
  const std::size_t k = wide ? a.rows() : a.cols();
  std::vector<Vector> w(k, Vector(len));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (wide)
        w[i][j] = a(i, j);
      else
        w[j][i] = a(i, j);
    }

  constexpr int kMaxSweeps = 100;
  constexpr double kTol = 1e-15;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        const double* wp = w[p].data();
        const double* wq = w[q].data();
        for (std::size_t r = 0; r < len; ++r) {
          alpha += wp[r] * wp[r];
          beta += wq[r] * wq[r];
          gamma += wp[r] * wq[r];
        }
        if (gamma == 0.0 || alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        double* mp = w[p].data();
        double* mq = w[q].data();
        for (std::size_t r = 0; r < len; ++r) {
          const double xp = mp[r];
          const double xq = mq[r];
          mp[r] = c * xp - s * xq;
          mq[r] = s * xp + c * xq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sv(k);
  for (std::size_t i = 0; i < k; ++i) sv[i] = norm(w[i]);
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

std::size_t numerical_rank(std::span<const double> sv) {
  if (sv.empty() || sv.front() <= 0.0) return 0;
  const double cut = kRankTolerance * sv.front();
  return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [&](double s) { return s > cut; }));
}

std::size_t numerical_rank(const Matrix& a) { return numerical_rank(singular_values(a)); }

Vector null_vector(const Matrix& m) {
  const std::size_t n = m.rows();
  const std::size_t k = m.cols();
  if (k <= n) throw InvalidArgument("null_vector: matrix needs more columns than rows");

  // B = M^T is k x n; reflectors H_0..H_{n-1} triangularize it.
  Matrix b = m.transpose();
  std::vector<Vector> reflectors;
  reflectors.reserve(n);
  for (std::size_t col = 0; col < n; ++col) {
    Vector h(k, 0.0);
    double sigma = 0.0;
    for (std::size_t r = col; r < k; ++r) sigma += b(r, col) * b(r, col);
    const double alpha = std::sqrt(sigma);
    if (alpha == 0.0) {
      reflectors.push_back(std::move(h));
      continue;
    }
    const double x0 = b(col, col);
    const double beta = x0 >= 0.0 ? -alpha : alpha;
    for (std::size_t r = col; r < k; ++r) h[r] = b(r, col);
    h[col] -= beta;
    const double hn = norm(h);
    for (double& x : h) x /= hn;
    for (std::size_t c = col; c < n; ++c) {
      double proj = 0.0;
      for (std::size_t r = col; r < k; ++r) proj += h[r] * b(r, c);
      for (std::size_t r = col; r < k; ++r) b(r, c) -= 2.0 * proj * h[r];
    }
    reflectors.push_back(std::move(h));
  }

  Vector c(k, 0.0);
  c[k - 1] = 1.0;
  for (std::size_t i = n; i-- > 0;) {
    const double proj = dot(reflectors[i], c);
    for (std::size_t r = 0; r < k; ++r) c[r] -= 2.0 * proj * reflectors[i][r];
  }
  c = normalized(c);
  std::size_t lead = 0;
  for (std::size_t i = 1; i < k; ++i)
    if (std::abs(c[i]) > std::abs(c[lead]) * (1.0 + 1e-12)) lead = i;
  if (c[lead] < 0.0)
    for (double& x : c) x = -x;
  return c;
}

Matrix sym_inverse(const Matrix& m, double rel_tol) {
  const SymEigen e = sym_eig(m);
  const std::size_t n = m.rows();
  if (n == 0) return {};
  const double top = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
  if (!(e.values.back() > rel_tol * top)) {
    std::ostringstream os;
    os << "sym_inverse: matrix is singular or indefinite (lambda_min = " << e.values.back()
       << ", lambda_max = " << e.values.front() << ")";
    throw NumericalError(os.str());
  }
  Matrix inv(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / e.values[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) inv(i, j) += w * e.vectors(i, k) * e.vectors(j, k);
  }
  return inv;
}

}  // namespace prstab
