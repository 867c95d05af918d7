#include "prstab/frame.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "prstab/error.hpp"

namespace prstab {

SubsetMask::SubsetMask(std::size_t universe) : universe_(universe), words_((universe + 63) / 64 + (universe == 0), 0) {}

SubsetMask SubsetMask::from_indices(std::size_t universe, std::span<const std::size_t> indices) {
  SubsetMask s(universe);
  for (std::size_t i : indices) {
    if (i >= universe) throw InvalidArgument("SubsetMask: index out of range");
    s.insert(i);
  }
  return s;
}

SubsetMask SubsetMask::from_bits(std::size_t universe, std::uint64_t bits) {
  if (universe > 64) throw InvalidArgument("SubsetMask::from_bits: universe exceeds 64");
  SubsetMask s(universe);
  if (universe < 64) bits &= (std::uint64_t{1} << universe) - 1;
  s.words_[0] = bits;
  return s;
}

std::size_t SubsetMask::count() const {
  std::size_t c = 0;
  for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

SubsetMask SubsetMask::complement() const {
  SubsetMask c(universe_);
  for (std::size_t i = 0; i < universe_; ++i)
    if (!contains(i)) c.insert(i);
  return c;
}

std::vector<std::size_t> SubsetMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < universe_; ++i)
    if (contains(i)) out.push_back(i);
  return out;
}

bool SubsetMask::is_subset_of(const SubsetMask& other) const {
  for (std::size_t i = 0; i < universe_; ++i)
    if (contains(i) && !other.contains(i)) return false;
  return true;
}

std::string SubsetMask::to_string() const {
  std::string s(universe_, '0');
  for (std::size_t i = 0; i < universe_; ++i)
    if (contains(i)) s[i] = '1';
  return s;
}

bool SubsetMask::operator<(const SubsetMask& other) const {
  if (universe_ != other.universe_) return universe_ < other.universe_;
  for (std::size_t w = words_.size(); w-- > 0;)
    if (words_[w] != other.words_[w]) return words_[w] < other.words_[w];
  return false;
}

Frame::Frame(std::size_t n, std::size_t m, std::vector<double> data) : dim_(n), count_(m), data_(std::move(data)) {}

Frame::Frame(const Matrix& f) : dim_(f.rows()), count_(f.cols()), data_(f.rows() * f.cols()) {
  if (dim_ == 0 || count_ == 0) throw InvalidArgument("Frame: dimension and vector count must be positive");
  for (std::size_t j = 0; j < count_; ++j)
    for (std::size_t i = 0; i < dim_; ++i) {
      const double v = f(i, j);
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "Frame: non-finite entry at row " << i << ", column " << j;
        throw InvalidArgument(os.str());
      }
      data_[j * dim_ + i] = v;
    }
}

Frame Frame::from_columns(const std::vector<Vector>& columns) {
  if (columns.empty()) throw InvalidArgument("Frame: no columns");
  Matrix m(columns.front().size(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != m.rows()) throw InvalidArgument("Frame: columns have different lengths");
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = columns[j][i];
  }
  return Frame(m);
}

Matrix Frame::matrix() const {
  Matrix m(dim_, count_);
  for (std::size_t j = 0; j < count_; ++j)
    for (std::size_t i = 0; i < dim_; ++i) m(i, j) = data_[j * dim_ + i];
  return m;
}

double Frame::max_column_norm() const {
  double l = 0.0;
  for (std::size_t j = 0; j < count_; ++j) l = std::max(l, column_norm(j));
  return l;
}

Matrix Frame::submatrix(std::span<const std::size_t> indices) const {
  Matrix m(dim_, indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto col = column(indices[k]);
    for (std::size_t i = 0; i < dim_; ++i) m(i, k) = col[i];
  }
  return m;
}

Matrix Frame::gram(std::span<const std::size_t> indices) const {
  Matrix g(dim_, dim_);
  for (std::size_t j : indices) {
    const auto col = column(j);
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t b = a; b < dim_; ++b) g(a, b) += col[a] * col[b];
  }
  for (std::size_t a = 0; a < dim_; ++a)
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  return g;
}

Matrix Frame::gram() const {
  std::vector<std::size_t> all(count_);
  for (std::size_t j = 0; j < count_; ++j) all[j] = j;
  return gram(all);
}

Vector Frame::coefficients(std::span<const double> x) const {
  require_dim(*this, x, "coefficients");
  Vector c(count_);
  for (std::size_t j = 0; j < count_; ++j) c[j] = dot(column(j), x);
  return c;
}

Frame Frame::scaled(double factor) const {
  std::vector<double> d = data_;
  for (double& v : d) v *= factor;
  return Frame(dim_, count_, std::move(d));
}

Frame Frame::with_column(std::size_t j, std::span<const double> v) const {
  if (j >= count_ || v.size() != dim_) throw InvalidArgument("Frame::with_column: bad index or length");
  std::vector<double> d = data_;
  std::copy(v.begin(), v.end(), d.begin() + static_cast<std::ptrdiff_t>(j * dim_));
  return Frame(dim_, count_, std::move(d));
}

Frame Frame::select(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InvalidArgument("Frame::select: empty selection");
  std::vector<double> d;
  d.reserve(indices.size() * dim_);
  for (std::size_t j : indices) {
    if (j >= count_) throw InvalidArgument("Frame::select: index out of range");
    const auto col = column(j);
    d.insert(d.end(), col.begin(), col.end());
  }
  return Frame(dim_, indices.size(), std::move(d));
}

void require_dim(const Frame& f, std::span<const double> x, const char* what) {
  if (x.size() != f.dim()) {
    std::ostringstream os;
    os << what << ": vector has length " << x.size() << " but the frame dimension is " << f.dim();
    throw InvalidArgument(os.str());
  }
}

namespace {

Vector clamped_eigenvalues(const Matrix& g) {
  Vector ev = sym_eig(g).values;
  const double scale = frobenius_norm(g);
  for (double& v : ev)
    if (v < 0.0 && v >= -1e-12 * scale) v = 0.0;
  return ev;
}

}  // namespace

FrameBounds frame_bounds(const Frame& f) {
  const Vector ev = clamped_eigenvalues(f.gram());
  return {std::max(ev.back(), 0.0), ev.front()};
}

double subset_sigma_n(const Frame& f, std::span<const std::size_t> indices) {
  if (indices.size() < f.dim()) return 0.0;
  return singular_values(f.submatrix(indices)).back();
}

std::size_t subset_rank(const Frame& f, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0;
  return numerical_rank(f.submatrix(indices));
}

SpectralSummary subset_spectrum(const Frame& f, const SubsetMask& s) {
  if (s.universe() != f.count()) throw InvalidArgument("subset_spectrum: mask size differs from frame size");
  const auto idx = s.indices();
  SpectralSummary out;
  out.eigenvalues = clamped_eigenvalues(f.gram(idx));
  out.sigma_min = subset_sigma_n(f, idx);
  out.lower = out.sigma_min * out.sigma_min;
  return out;
}

Vector analysis_map(const Frame& f, std::span<const double> x) {
  require_dim(f, x, "analysis_map");
  Vector a = f.coefficients(x);
  for (double& v : a) v = std::abs(v);
  return a;
}

Vector analysis_map_sq(const Frame& f, std::span<const double> x) {
  require_dim(f, x, "analysis_map_sq");
  Vector a = f.coefficients(x);
  for (double& v : a) v *= v;
  return a;
}

namespace {
void require_same(std::span<const double> x, std::span<const double> y, const char* what) {
  if (x.size() != y.size()) {
    std::ostringstream os;
    os << what << ": vectors have lengths " << x.size() << " and " << y.size();
    throw InvalidArgument(os.str());
  }
}
}  // namespace

double dist_d(std::span<const double> x, std::span<const double> y) {
  require_same(x, y, "dist_d");
  double minus = 0.0, plus = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    minus += (x[i] - y[i]) * (x[i] - y[i]);
    plus += (x[i] + y[i]) * (x[i] + y[i]);
  }
  return std::sqrt(std::min(minus, plus));
}

double dist_d1_spectral(std::span<const double> x, std::span<const double> y) {
  require_same(x, y, "dist_d1");
  const std::size_t n = x.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = x[i] * x[j] - y[i] * y[j];
  double s = 0.0;
  for (double v : sym_eig(m).values) s += std::abs(v);
  return s;
}

double dist_d1_factored(std::span<const double> x, std::span<const double> y) {
  require_same(x, y, "dist_d1");
  double minus = 0.0, plus = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    minus += (x[i] - y[i]) * (x[i] - y[i]);
    plus += (x[i] + y[i]) * (x[i] + y[i]);
  }
  return std::sqrt(minus) * std::sqrt(plus);
}

double dist_d1(std::span<const double> x, std::span<const double> y) {
  const double a = dist_d1_spectral(x, y);
  const double b = dist_d1_factored(x, y);
  const double scale = std::max(1.0, dot(x, x) + dot(y, y));
  if (std::abs(a - b) > 1e-9 * scale) {
    std::ostringstream os;
    os << "dist_d1: spectral route " << a << " and factored route " << b << " disagree";
    throw NumericalError(os.str());
  }
  return b;
}

}  // namespace prstab
