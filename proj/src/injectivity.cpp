#include "prstab/injectivity.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "prstab/enumerate.hpp"
#include "prstab/error.hpp"
#include "prstab/rng.hpp"

namespace prstab {

namespace {

bool spans(const Frame& f, const std::vector<std::size_t>& idx) {
  return idx.size() >= f.dim() && subset_rank(f, idx) == f.dim();
}

std::string budget_message(const char* what, std::uint64_t needed, std::uint64_t budget) {
  std::ostringstream os;
  os << what << ": exact check infeasible, needs " << needed << " subsets but the budget is " << budget;
  return os.str();
}

}  // namespace

PartitionCheck complement_property(const Frame& f, std::uint64_t budget, unsigned jobs) {
  const std::size_t m = f.count();
  if (m - 1 >= 63 || (std::uint64_t{1} << (m - 1)) > budget)
    throw BudgetExceeded(budget_message("complement_property", m - 1 >= 63 ? ~std::uint64_t{0} : std::uint64_t{1} << (m - 1), budget));
  const std::uint64_t total = std::uint64_t{1} << (m - 1);

  struct Hit {
    bool found = false;
    std::uint64_t bits = 0;
  };
  const auto hits = map_chunks<Hit>(total, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<std::size_t> in, out;
    for (std::uint64_t s = begin; s < end; ++s) {
      in.clear();
      out.clear();
      for (std::size_t j = 0; j < m; ++j) ((s >> j) & 1U ? in : out).push_back(j);
      if (!spans(f, in) && !spans(f, out)) return Hit{true, s};
    }
    return Hit{};
  });
  for (const Hit& h : hits)
    if (h.found) return {false, SubsetMask::from_bits(m, h.bits)};
  return {true, std::nullopt};
}

PartitionCheck full_spark(const Frame& f, std::uint64_t budget, unsigned jobs) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  if (m < n) {
    std::vector<std::size_t> all(m);
    for (std::size_t j = 0; j < m; ++j) all[j] = j;
    return {false, SubsetMask::from_indices(m, all)};
  }
  const std::uint64_t total = binomial(m, n);
  if (total > budget) throw BudgetExceeded(budget_message("full_spark", total, budget));

  struct Hit {
    bool found = false;
    std::vector<std::size_t> subset;
  };
  const auto hits = map_chunks<Hit>(total, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    auto c = unrank_combination(m, n, begin);
    for (std::uint64_t r = begin; r < end; ++r) {
      if (subset_rank(f, c) < n) return Hit{true, c};
      next_combination(c, m);
    }
    return Hit{};
  });
  for (const Hit& h : hits)
    if (h.found) return {false, SubsetMask::from_indices(m, h.subset)};
  return {true, std::nullopt};
}

Matrix r_matrix(const Frame& f, std::span<const double> x) {
  require_dim(f, x, "r_matrix");
  const std::size_t n = f.dim();
  Matrix r(n, n);
  for (std::size_t j = 0; j < f.count(); ++j) {
    const auto col = f.column(j);
    const double c = dot(col, x);
    const double w = c * c;
    if (w == 0.0) continue;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) r(a, b) += w * col[a] * col[b];
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b) r(a, b) = r(b, a);
  return r;
}

double a0_scale(const Frame& f) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const double q = dot(f.column(j), f.column(j));
    s += q * q;
  }
  return s / static_cast<double>(f.count());
}

namespace {

struct MinEig {
  double value;
  Vector vector;
};

MinEig min_eig(const Matrix& m) {
  SymEigen e = sym_eig(m);
  return {e.values.back(), e.vector(m.rows() - 1)};
}

/// lambda_min(R(x)) for x = (cos phi, sin phi) in closed form.
double lambda_min_polar(const Frame& f, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  double a = 0.0, b = 0.0, d = 0.0;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const auto col = f.column(j);
    const double k = col[0] * c + col[1] * s;
    const double w = k * k;
    a += w * col[0] * col[0];
    b += w * col[0] * col[1];
    d += w * col[1] * col[1];
  }
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  return mid - rad;
}

template <class Fn>
double golden_minimize(Fn&& fn, double lo, double hi, int iters, double& arg) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = fn(x1), f2 = fn(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = fn(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = fn(x2);
    }
  }
  arg = f1 <= f2 ? x1 : x2;
  return std::min(f1, f2);
}

A0Result a0_polar(const Frame& f, const SearchConfig& cfg) {
  const std::size_t grid = std::max<std::size_t>(cfg.grid_density, 16);
  const double h = std::numbers::pi / static_cast<double>(grid);
  Vector vals(grid);
  for (std::size_t k = 0; k < grid; ++k) vals[k] = lambda_min_polar(f, h * static_cast<double>(k));
  const double grid_min = *std::min_element(vals.begin(), vals.end());

  // |d/dphi lambda_min| <= sum ||f_j||^4, so the true minimum is no lower than
  // grid_min - L h / 2 and every basin that could hold it has a grid value
  // within L h of grid_min.
  double lipschitz = 0.0;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const double q = dot(f.column(j), f.column(j));
    lipschitz += q * q;
  }
  const double slack = lipschitz * h;

  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t k = 0; k < grid; ++k) {
    const double left = vals[(k + grid - 1) % grid];
    const double right = vals[(k + 1) % grid];
    if (vals[k] <= left && vals[k] <= right && vals[k] <= grid_min + slack) candidates.emplace_back(vals[k], k);
  }
  std::sort(candidates.begin(), candidates.end());
  constexpr std::size_t kMaxRefine = 64;
  if (candidates.size() > kMaxRefine) candidates.resize(kMaxRefine);

  double best = grid_min;
  double best_phi = 0.0;
  for (std::size_t k = 0; k < grid; ++k)
    if (vals[k] == grid_min) {
      best_phi = h * static_cast<double>(k);
      break;
    }
  for (const auto& [v, k] : candidates) {
    double arg = 0.0;
    const double center = h * static_cast<double>(k);
    const double val = golden_minimize([&](double p) { return lambda_min_polar(f, p); }, center - h, center + h, 80, arg);
    if (val < best) {
      best = val;
      best_phi = arg;
    }
  }

  A0Result out;
  out.x_star = {std::cos(best_phi), std::sin(best_phi)};
  const MinEig me = min_eig(r_matrix(f, out.x_star));
  out.a0 = std::max(0.0, std::min(best, me.value));
  out.u_star = me.vector;
  out.exact = true;
  out.certified_lower = std::max(0.0, grid_min - 0.5 * slack);
  return out;
}

struct Descent {
  double value = std::numeric_limits<double>::infinity();
  Vector x;
  bool converged = false;
};

/// Minimises h(x) = lambda_min(R(x)) on the sphere from one start. Each
/// iteration takes the better of a backtracking projected-gradient step and
/// the alternating step x <- argmin_x <R(u) x, x> (u the current minimiser),
/// both of which are monotone.
Descent descend(const Frame& f, Vector x, const SearchConfig& cfg) {
  const double scale = a0_scale(f) * static_cast<double>(f.count());
  MinEig cur = min_eig(r_matrix(f, x));
  double step = 1.0 / std::max(scale, 1e-300);
  Descent out;
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    // Euclidean gradient of u^T R(x) u with respect to x.
    Vector grad(f.dim(), 0.0);
    for (std::size_t j = 0; j < f.count(); ++j) {
      const auto col = f.column(j);
      const double cu = dot(col, cur.vector);
      const double cx = dot(col, x);
      const double w = 2.0 * cu * cu * cx;
      for (std::size_t i = 0; i < f.dim(); ++i) grad[i] += w * col[i];
    }
    const Vector rgrad = axpy(-dot(grad, x), x, grad);
    const double gnorm = norm(rgrad);
    if (gnorm < cfg.tol) {
      out.converged = true;
      break;
    }

    Vector best_x = x;
    MinEig best = cur;

    double t = step * 2.0;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      Vector trial = normalized(axpy(-t, rgrad, x));
      MinEig e = min_eig(r_matrix(f, trial));
      if (e.value <= cur.value - 1e-4 * t * gnorm * gnorm) {
        if (e.value < best.value) {
          best = std::move(e);
          best_x = std::move(trial);
        }
        step = t;
        break;
      }
    }

    Vector alt = min_eig(r_matrix(f, cur.vector)).vector;
    MinEig ealt = min_eig(r_matrix(f, alt));
    if (ealt.value < best.value) {
      best = std::move(ealt);
      best_x = std::move(alt);
    }

    const double gain = cur.value - best.value;
    if (!(gain > 1e-15 * std::max(scale, 1e-300))) {
      out.converged = true;
      if (gain > 0.0) {
        x = std::move(best_x);
        cur = std::move(best);
      }
      break;
    }
    x = std::move(best_x);
    cur = std::move(best);
  }
  out.value = cur.value;
  out.x = std::move(x);
  return out;
}

}  // namespace

A0Result a0(const Frame& f, const SearchConfig& cfg) {
  const std::size_t n = f.dim();
  if (n == 1) {
    A0Result out;
    out.a0 = a0_scale(f) * static_cast<double>(f.count());
    out.x_star = {1.0};
    out.u_star = {1.0};
    out.exact = true;
    out.certified_lower = out.a0;
    return out;
  }
  if (n == 2) return a0_polar(f, cfg);

  const std::size_t restarts = std::max<std::size_t>(cfg.restarts, 1);
  struct Best {
    double value = std::numeric_limits<double>::infinity();
    Vector x;
    bool converged = false;
  };
  const auto results = map_chunks<Best>(restarts, cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
    Best b;
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng(cfg.seed, {0xA0, r});
      Descent d = descend(f, rng.unit_vector(n), cfg);
      if (d.value < b.value) b = {d.value, std::move(d.x), d.converged};
    }
    return b;
  });
  Best best;
  for (const Best& b : results)
    if (b.value < best.value) best = b;

  A0Result out;
  out.x_star = best.x;
  const MinEig me = min_eig(r_matrix(f, best.x));
  out.a0 = std::max(0.0, me.value);
  out.u_star = me.vector;
  out.exact = false;
  out.converged = best.converged;
  return out;
}

std::string to_string(CertificateMethod m) {
  switch (m) {
    case CertificateMethod::complement:
      return "complement";
    case CertificateMethod::full_spark:
      return "full_spark";
    case CertificateMethod::a0_positive:
      return "a0_positive";
  }
  return "unknown";
}

Certificate phase_retrievable(const Frame& f, const CertifyConfig& cfg) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  Certificate cert;

  const A0Result a = a0(f, cfg.search);
  const double scale = a0_scale(f);
  cert.a0 = a.a0;
  cert.a0_normalized = scale > 0.0 ? a.a0 / scale : 0.0;
  cert.a0_positive = cert.a0_normalized > cfg.verdict_threshold;
  cert.a0_exact = a.exact;
  cert.x_star = a.x_star;
  cert.u_star = a.u_star;

  std::optional<SubsetMask> witness;
  try {
    const PartitionCheck c = complement_property(f, cfg.partition_budget, cfg.search.jobs);
    cert.complement_holds = c.holds;
    witness = c.witness;
  } catch (const BudgetExceeded&) {
  }

  if (m == 2 * n - 1) {
    try {
      const PartitionCheck s = full_spark(f, cfg.spark_budget, cfg.search.jobs);
      cert.full_spark_holds = s.holds;
      if (!cert.complement_holds) witness = s.witness;
    } catch (const BudgetExceeded&) {
    }
  }

  if (cert.complement_holds && *cert.complement_holds != cert.a0_positive) {
    std::ostringstream os;
    os << "phase_retrievable: complement property says " << (*cert.complement_holds ? "retrievable" : "not retrievable")
       << " but normalised a0 = " << cert.a0_normalized << " (threshold " << cfg.verdict_threshold << ")";
    throw NumericalError(os.str());
  }
  if (cert.full_spark_holds) {
    const bool other = cert.complement_holds.value_or(cert.a0_positive);
    if (*cert.full_spark_holds != other) {
      std::ostringstream os;
      os << "phase_retrievable: m = 2n-1 but full spark = " << *cert.full_spark_holds
         << " disagrees with the injectivity verdict " << other;
      throw NumericalError(os.str());
    }
  }

  if (cert.complement_holds) {
    cert.method = CertificateMethod::complement;
    cert.retrievable = *cert.complement_holds;
    cert.exact = true;
  } else if (cert.full_spark_holds) {
    cert.method = CertificateMethod::full_spark;
    cert.retrievable = *cert.full_spark_holds;
    cert.exact = true;
  } else if (m < 2 * n - 1) {
    // Too few vectors: the first n-1 indices against the rest is a partition
    // where neither side can span.
    cert.method = CertificateMethod::complement;
    cert.retrievable = false;
    cert.exact = true;
    std::vector<std::size_t> head(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) head[j] = j;
    witness = SubsetMask::from_indices(m, head);
  } else {
    cert.method = CertificateMethod::a0_positive;
    cert.retrievable = cert.a0_positive;
    cert.exact = a.exact;
  }
  if (!cert.retrievable) cert.witness = witness;
  return cert;
}

}  // namespace prstab
