#include "prstab/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

#include "prstab/enumerate.hpp"
#include "prstab/error.hpp"
#include "prstab/rng.hpp"

namespace prstab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Best-so-far record for subset minimisations; ties go to the smaller mask.
struct SubsetBest {
  double value = kInf;
  SubsetMask subset;

  void offer(double v, const SubsetMask& s) {
    if (v < value || (v == value && s < subset)) {
      value = v;
      subset = s;
    }
  }
  void merge(const SubsetBest& o) {
    if (o.value < kInf) offer(o.value, o.subset);
  }
};

void split_bits(std::size_t m, std::uint64_t bits, std::vector<std::size_t>& in, std::vector<std::size_t>& out) {
  in.clear();
  out.clear();
  for (std::size_t j = 0; j < m; ++j) ((bits >> j) & 1U ? in : out).push_back(j);
}

void split_mask(const SubsetMask& s, std::vector<std::size_t>& in, std::vector<std::size_t>& out) {
  in.clear();
  out.clear();
  for (std::size_t j = 0; j < s.universe(); ++j) (s.contains(j) ? in : out).push_back(j);
}

std::string budget_message(const char* what, std::uint64_t needed, std::uint64_t budget) {
  std::ostringstream os;
  os << what << ": exact enumeration needs " << needed << " subsets, budget is " << budget;
  return os.str();
}

Vector lowest_eigvec(const Matrix& g) {
  const SymEigen e = sym_eig(g);
  return e.vector(g.rows() - 1);
}

struct LowestPair {
  double value = 0.0;  // lambda_min, clamped at 0
  Vector vector;
};

/// lambda_min of a PSD Gram matrix by Cholesky and inverse iteration, used by
/// the sampled searches to screen subsets. Falls back to the Jacobi solver for
/// (near) singular input or slow convergence.
LowestPair lowest_pair(const Matrix& g) {
  const std::size_t n = g.rows();
  const auto fallback = [&] {
    const SymEigen e = sym_eig(g);
    return LowestPair{std::max(0.0, e.values.back()), e.vector(n - 1)};
  };
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += g(i, i);
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = g(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 1e-10 * tr)) return fallback();
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = g(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  Vector x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i);
  x = normalized(x);
  double prev = kInf;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[i];
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * y[k];
      y[i] = v / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = y[i];
      for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * y[k];
      y[i] = v / l(i, i);
    }
    const double len = norm(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / len;
    const double lambda = 1.0 / len;
    if (std::abs(prev - lambda) <= 1e-15 * lambda) {
      const Vector gx = g * std::span<const double>(x);
      return {std::max(0.0, dot(x, gx)), x};
    }
    prev = lambda;
  }
  return fallback();
}

double partition_value_sq(const Frame& f, const std::vector<std::size_t>& in, const std::vector<std::size_t>& out) {
  const double a = subset_sigma_n(f, in);
  const double b = subset_sigma_n(f, out);
  return a * a + b * b;
}

/// Partition representative without index m-1.
SubsetMask canonical_partition(SubsetMask s) {
  if (s.universe() > 0 && s.contains(s.universe() - 1)) return s.complement();
  return s;
}

SubsetExtremum delta_exact(const Frame& f, const SubsetSearchConfig& cfg) {
  const std::size_t m = f.count();
  if (m - 1 >= 63 || (std::uint64_t{1} << (m - 1)) > cfg.budget)
    throw BudgetExceeded(budget_message("delta", m - 1 >= 63 ? ~std::uint64_t{0} : std::uint64_t{1} << (m - 1), cfg.budget));
  const std::uint64_t total = std::uint64_t{1} << (m - 1);
  struct Local {
    double value = kInf;
    std::uint64_t bits = 0;
  };
  const auto parts = map_chunks<Local>(total, cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
    Local best;
    std::vector<std::size_t> in, out;
    for (std::uint64_t s = begin; s < end; ++s) {
      split_bits(m, s, in, out);
      const double v = partition_value_sq(f, in, out);
      if (v < best.value) best = {v, s};
    }
    return best;
  });
  Local best;
  for (const Local& p : parts)
    if (p.value < best.value) best = p;
  return {std::sqrt(best.value), SubsetMask::from_bits(m, best.bits), true};
}

/// Sampled omega: S^c ranges over (n-1)-subsets, which never span, so every
/// candidate is admissible and the result is an upper bound.
SubsetExtremum omega_sampled(const Frame& f, const SubsetSearchConfig& cfg) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  if (m < n) return {0.0, SubsetMask(m), false};
  // Candidates are ranked by the Gram screen; the winner is re-evaluated by SVD.
  SubsetBest best;
  std::uint64_t evals = 0;
  std::vector<std::size_t> in, out;
  auto evaluate = [&](const SubsetMask& s) {
    ++evals;
    LowestPair p = lowest_pair(f.gram(s.indices()));
    best.offer(p.value, s);
    return p;
  };
  auto finish = [&] { return SubsetExtremum{subset_sigma_n(f, best.subset.indices()), best.subset, false}; };

  // S = everything (S^c empty) is always admissible.
  evaluate(SubsetMask(m).complement());
  const std::size_t drop = n - 1;
  if (drop == 0) return finish();

  auto keep_from_direction = [&](std::span<const double> v) {
    std::vector<std::pair<double, std::size_t>> w(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double c = dot(f.column(j), v);
      w[j] = {-c * c, j};
    }
    std::sort(w.begin(), w.end());
    SubsetMask s = SubsetMask(m).complement();
    for (std::size_t k = 0; k < drop; ++k) s.erase(w[k].second);
    return s;
  };

  Rng rng(cfg.seed, {0x03E6A});
  const std::uint64_t alternating_budget = std::max<std::uint64_t>(cfg.samples * 3 / 4, 1);
  while (evals < alternating_budget) {
    Vector v = rng.unit_vector(n);
    SubsetMask s = keep_from_direction(v);
    for (int it = 0; it < 30 && evals < alternating_budget; ++it) {
      v = evaluate(s).vector;
      SubsetMask next = keep_from_direction(v);
      if (next == s) break;
      s = std::move(next);
    }
  }

  // Swap descent around the incumbent.
  bool improved = true;
  while (improved && evals < cfg.samples) {
    improved = false;
    const SubsetMask base = best.subset;
    split_mask(base, in, out);
    if (out.empty()) break;
    const Vector v = lowest_pair(f.gram(in)).vector;
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t k : in) {
      const double c = dot(f.column(k), v);
      ranked.emplace_back(-c * c, k);
    }
    std::sort(ranked.begin(), ranked.end());
    const std::size_t top = std::min<std::size_t>(ranked.size(), 4);
    for (std::size_t a = 0; a < top && !improved && evals < cfg.samples; ++a)
      for (std::size_t j : out) {
        SubsetMask s = base;
        s.erase(ranked[a].second);
        s.insert(j);
        const double before = best.value;
        evaluate(s);
        if (best.value < before) {
          improved = true;
          break;
        }
        if (evals >= cfg.samples) break;
      }
  }
  return finish();
}

SubsetExtremum delta_sampled(const Frame& f, const SubsetSearchConfig& cfg) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  SubsetBest best;
  std::uint64_t evals = 0;
  std::vector<std::size_t> in, out;
  Vector low_in, low_out;
  // Gram screen as in omega_sampled; the winner is re-evaluated by SVD.
  auto evaluate = [&](const SubsetMask& raw) {
    const SubsetMask s = canonical_partition(raw);
    split_mask(s, in, out);
    ++evals;
    LowestPair a = lowest_pair(f.gram(in)), b = lowest_pair(f.gram(out));
    const bool flipped = !(s == raw);
    low_in = std::move(flipped ? b.vector : a.vector);
    low_out = std::move(flipped ? a.vector : b.vector);
    const double v = a.value + b.value;
    best.offer(v, s);
    return v;
  };

  // Thin partitions (one side with at most n vectors) when they fit.
  std::uint64_t thin = 0;
  for (std::size_t k = 0; k <= std::min(n, m); ++k) {
    thin += binomial(m, k);
    if (thin > cfg.samples) break;
  }
  if (thin <= cfg.samples) {
    for (std::size_t k = 0; k <= std::min(n, m); ++k) {
      if (k == 0) {
        evaluate(SubsetMask(m));
        continue;
      }
      std::vector<std::size_t> c(k);
      for (std::size_t i = 0; i < k; ++i) c[i] = i;
      do evaluate(SubsetMask::from_indices(m, c));
      while (next_combination(c, m));
    }
  }

  Rng rng(cfg.seed, {0xDE17A});
  const std::uint64_t target = evals + std::max<std::uint64_t>(cfg.samples, 1);
  // Alternating descent on sum_j min(<f_j,u>^2, <f_j,v>^2).
  const std::uint64_t alternating_end = evals + (target - evals) / 2;
  while (evals < alternating_end) {
    Vector u = rng.unit_vector(n);
    Vector v = rng.unit_vector(n);
    SubsetMask prev(m);
    for (int it = 0; it < 30 && evals < alternating_end; ++it) {
      SubsetMask s(m);
      for (std::size_t j = 0; j < m; ++j) {
        const double cu = dot(f.column(j), u), cv = dot(f.column(j), v);
        if (cu * cu <= cv * cv) s.insert(j);
      }
      if (it > 0 && s == prev) break;
      evaluate(s);
      u = low_in;
      v = low_out;
      prev = std::move(s);
    }
  }
  const std::uint64_t random_end = evals + (target - evals) / 2;
  while (evals < random_end) {
    SubsetMask s(m);
    for (std::size_t j = 0; j < m; ++j)
      if (rng.next_u64() & 1U) s.insert(j);
    evaluate(s);
  }
  bool improved = true;
  while (improved && evals < target) {
    improved = false;
    const SubsetMask base = best.subset;
    for (std::size_t j = 0; j < m && evals < target; ++j) {
      SubsetMask s = base;
      s.toggle(j);
      const double before = best.value;
      evaluate(s);
      if (best.value < before) {
        improved = true;
        break;
      }
    }
  }
  split_mask(best.subset, in, out);
  return {std::sqrt(partition_value_sq(f, in, out)), best.subset, false};
}

/// One pass over n-subsets: full spark and the smallest sigma_n.
struct NSubsetPass {
  bool full_spark = true;
  double min_sigma = kInf;
  SubsetMask argmin;
};

NSubsetPass n_subset_pass(const Frame& f, std::uint64_t budget, unsigned jobs) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  const std::uint64_t total = binomial(m, n);
  if (total > budget) throw BudgetExceeded(budget_message("n-subset enumeration", total, budget));
  const auto parts = map_chunks<NSubsetPass>(total, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    NSubsetPass p;
    SubsetBest best;
    auto c = unrank_combination(m, n, begin);
    for (std::uint64_t r = begin; r < end; ++r) {
      const Vector sv = singular_values(f.submatrix(c));
      if (numerical_rank(sv) < n) p.full_spark = false;
      best.offer(sv.back(), SubsetMask::from_indices(m, c));
      next_combination(c, m);
    }
    p.min_sigma = best.value;
    p.argmin = best.subset;
    return p;
  });
  NSubsetPass out;
  SubsetBest best;
  for (const auto& p : parts) {
    out.full_spark = out.full_spark && p.full_spark;
    if (p.min_sigma < kInf) best.offer(p.min_sigma, p.argmin);
  }
  out.min_sigma = best.value;
  out.argmin = best.subset;
  return out;
}

SubsetExtremum omega_exact(const Frame& f, const SubsetSearchConfig& cfg) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  if (m < n) return {0.0, SubsetMask(m), true};

  bool spark = false;
  std::optional<NSubsetPass> pass;
  if (binomial(m, n) <= cfg.budget) {
    pass = n_subset_pass(f, cfg.budget, cfg.jobs);
    spark = pass->full_spark;
  }

  if (spark) {
    // Maximal admissible complements have n-1 elements, so |S| = m - n + 1.
    if (m - n + 1 == n) return {pass->min_sigma, pass->argmin, true};
    const std::uint64_t total = binomial(m, n - 1);
    if (total > cfg.budget) throw BudgetExceeded(budget_message("omega", total, cfg.budget));
    const auto parts = map_chunks<SubsetBest>(total, cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
      SubsetBest best;
      auto c = unrank_combination(m, n - 1, begin);
      for (std::uint64_t r = begin; r < end; ++r) {
        const SubsetMask s = SubsetMask::from_indices(m, c).complement();
        best.offer(subset_sigma_n(f, s.indices()), s);
        if (!next_combination(c, m)) break;
      }
      return best;
    });
    SubsetBest best;
    for (const auto& p : parts) best.merge(p);
    return {best.value, best.subset, true};
  }

  if (m >= 63 || (std::uint64_t{1} << m) > cfg.budget)
    throw BudgetExceeded(budget_message("omega", m >= 63 ? ~std::uint64_t{0} : std::uint64_t{1} << m, cfg.budget));
  const std::uint64_t total = std::uint64_t{1} << m;
  const auto parts = map_chunks<SubsetBest>(total, cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
    SubsetBest best;
    std::vector<std::size_t> comp, keep;
    for (std::uint64_t bits = begin; bits < end; ++bits) {
      split_bits(m, bits, comp, keep);
      if (comp.size() >= n && subset_rank(f, comp) == n) continue;
      best.offer(subset_sigma_n(f, keep), SubsetMask::from_indices(m, keep));
    }
    return best;
  });
  SubsetBest best;
  for (const auto& p : parts) best.merge(p);
  return {best.value, best.subset, true};
}

bool exact_delta_feasible(const Frame& f, std::uint64_t budget) {
  const std::size_t m = f.count();
  return m - 1 < 63 && (std::uint64_t{1} << (m - 1)) <= budget;
}

}  // namespace

SubsetExtremum delta(const Frame& f, const SubsetSearchConfig& cfg) { return delta_and_omega(f, cfg).first; }

std::pair<SubsetExtremum, SubsetExtremum> delta_and_omega(const Frame& f, const SubsetSearchConfig& cfg) {
  const bool exact = cfg.mode == SubsetMode::exact ||
                     (cfg.mode == SubsetMode::automatic && exact_delta_feasible(f, cfg.budget));
  SubsetExtremum w = omega(f, cfg);
  SubsetExtremum d = exact ? delta_exact(f, cfg) : delta_sampled(f, cfg);
  // Partitions whose complement cannot span contribute sigma_n(F_S) alone.
  if (w.value < d.value) d = {w.value, canonical_partition(w.subset), d.exact && w.exact};
  return {d, w};
}

SparkOmega omega_minimal_redundancy(const Frame& f, std::uint64_t budget, unsigned jobs) {
  if (f.count() + 1 != 2 * f.dim()) throw InvalidArgument("omega_minimal_redundancy: requires m = 2n - 1");
  const NSubsetPass pass = n_subset_pass(f, budget, jobs);
  SparkOmega out;
  out.full_spark = pass.full_spark;
  if (pass.full_spark) out.omega = SubsetExtremum{pass.min_sigma, pass.argmin, true};
  return out;
}

SubsetExtremum omega(const Frame& f, const SubsetSearchConfig& cfg) {
  if (cfg.mode == SubsetMode::sampled) return omega_sampled(f, cfg);
  if (cfg.mode == SubsetMode::exact) return omega_exact(f, cfg);
  try {
    return omega_exact(f, cfg);
  } catch (const BudgetExceeded&) {
    return omega_sampled(f, cfg);
  }
}

SubsetExtremum tau(const Frame& f, std::uint64_t budget, unsigned jobs) {
  const std::size_t n = f.dim();
  const std::size_t m = f.count();
  if (m < n) throw InvalidArgument("tau: fewer vectors than the dimension, no rank-n subset");
  const std::uint64_t total = binomial(m, n);
  if (total > budget) throw BudgetExceeded(budget_message("tau", total, budget));
  const auto parts = map_chunks<SubsetBest>(total, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    SubsetBest best;
    auto c = unrank_combination(m, n, begin);
    for (std::uint64_t r = begin; r < end; ++r) {
      const Vector sv = singular_values(f.submatrix(c));
      if (numerical_rank(sv) == n) best.offer(sv.back(), SubsetMask::from_indices(m, c));
      next_combination(c, m);
    }
    return best;
  });
  SubsetBest best;
  for (const auto& p : parts) best.merge(p);
  if (best.value == kInf) throw InvalidArgument("tau: no n-subset has rank n, input is not a frame");
  return {best.value, best.subset, true};
}

namespace {

double fourth_power_sum(const Frame& f, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const double c = dot(f.column(j), x);
    s += c * c * c * c;
  }
  return s;
}

double lambda_max_r(const Frame& f, std::span<const double> x) { return sym_eig(r_matrix(f, x)).values.front(); }

template <class Fn>
double golden_maximize(Fn&& fn, double lo, double hi, int iters, double& arg) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = fn(x1), f2 = fn(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 >= f2) {
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
  arg = f1 >= f2 ? x1 : x2;
  return std::max(f1, f2);
}

/// Grid plus golden refinement over the half circle for a periodic objective.
template <class Fn>
double polar_maximize(Fn&& fn, std::size_t grid, double& arg) {
  grid = std::max<std::size_t>(grid, 16);
  const double h = std::numbers::pi / static_cast<double>(grid);
  Vector vals(grid);
  for (std::size_t k = 0; k < grid; ++k) vals[k] = fn(h * static_cast<double>(k));
  std::vector<std::pair<double, std::size_t>> peaks;
  for (std::size_t k = 0; k < grid; ++k)
    if (vals[k] >= vals[(k + grid - 1) % grid] && vals[k] >= vals[(k + 1) % grid]) peaks.emplace_back(-vals[k], k);
  std::sort(peaks.begin(), peaks.end());
  if (peaks.size() > 16) peaks.resize(16);
  const std::size_t kbest = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  double best = vals[kbest];
  arg = h * static_cast<double>(kbest);
  for (const auto& [nv, k] : peaks) {
    double a = 0.0;
    const double c = h * static_cast<double>(k);
    const double v = golden_maximize(fn, c - h, c + h, 80, a);
    if (v > best) {
      best = v;
      arg = a;
    }
  }
  return best;
}

}  // namespace

LambdaFResult lambda_f(const Frame& f, const SearchConfig& cfg) {
  const std::size_t n = f.dim();
  LambdaFResult out;
  if (n == 1) {
    out.fourth_power_max = fourth_power_sum(f, Vector{1.0});
    out.r_matrix_max = out.fourth_power_max;
    out.argmax = {1.0};
    out.exact = true;
  } else if (n == 2) {
    double a1 = 0.0, a2 = 0.0;
    out.fourth_power_max =
        polar_maximize([&](double p) { return fourth_power_sum(f, Vector{std::cos(p), std::sin(p)}); }, cfg.grid_density, a1);
    out.r_matrix_max =
        polar_maximize([&](double p) { return lambda_max_r(f, Vector{std::cos(p), std::sin(p)}); }, cfg.grid_density, a2);
    out.argmax = {std::cos(a1), std::sin(a1)};
    out.exact = true;
  } else {
    // Starts: normalised columns, then seeded random unit vectors.
    std::vector<Vector> starts;
    for (std::size_t j = 0; j < f.count(); ++j)
      if (f.column_norm(j) > 0.0) starts.push_back(normalized(f.column(j)));
    for (std::size_t r = 0; r < cfg.restarts; ++r) starts.push_back(Rng(cfg.seed, {0x1A4B, r}).unit_vector(n));

    struct Best {
      double route1 = -1.0;
      Vector arg;
      double route2 = -1.0;
    };
    const auto parts = map_chunks<Best>(starts.size(), cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
      Best b;
      for (std::uint64_t s = begin; s < end; ++s) {
        // x <- grad / |grad| is monotone for the convex quartic on the sphere.
        Vector x = starts[s];
        double val = fourth_power_sum(f, x);
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
          Vector g(n, 0.0);
          for (std::size_t j = 0; j < f.count(); ++j) {
            const double c = dot(f.column(j), x);
            const double w = c * c * c;
            for (std::size_t i = 0; i < n; ++i) g[i] += w * f.column(j)[i];
          }
          if (norm(g) == 0.0) break;
          Vector nx = normalized(g);
          const double nv = fourth_power_sum(f, nx);
          const bool done = nv <= val * (1.0 + 1e-15);
          if (nv > val) {
            val = nv;
            x = std::move(nx);
          }
          if (done) break;
        }
        if (val > b.route1) {
          b.route1 = val;
          b.arg = x;
        }
        // Alternating ascent on sum <f,x>^2 <f,u>^2.
        Vector u = starts[s];
        double rv = lambda_max_r(f, u);
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
          const SymEigen e = sym_eig(r_matrix(f, u));
          Vector nu = e.vector(0);
          const double nv = lambda_max_r(f, nu);
          const bool done = nv <= rv * (1.0 + 1e-15);
          if (nv > rv) {
            rv = nv;
            u = std::move(nu);
          }
          if (done) break;
        }
        b.route2 = std::max(b.route2, rv);
      }
      return b;
    });
    Best best;
    for (const auto& p : parts) {
      if (p.route1 > best.route1) {
        best.route1 = p.route1;
        best.arg = p.arg;
      }
      best.route2 = std::max(best.route2, p.route2);
    }
    out.fourth_power_max = best.route1;
    out.r_matrix_max = best.route2;
    out.argmax = best.arg;
    out.exact = false;
  }
  // max_x lambda_max(R(x)) = max_{x,u} sum <x,f>^2 <u,f>^2 is the same quartic maximum.
  out.lambda_f = std::pow(std::max(out.fourth_power_max, out.r_matrix_max), 0.25);
  return out;
}

namespace {

struct NonzeroCoefficients {
  double min_abs = kInf;
  double max_norm = 0.0;
  bool any = false;
};

NonzeroCoefficients nonzero_coefficients(const Frame& f, std::span<const double> x) {
  require_dim(f, x, "eps0/delta_x");
  const double xn = norm(x);
  NonzeroCoefficients out;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const double fn = f.column_norm(j);
    const double c = std::abs(dot(f.column(j), x));
    if (c > 1e-12 * fn * xn && c > 0.0) {
      out.any = true;
      out.min_abs = std::min(out.min_abs, c);
      out.max_norm = std::max(out.max_norm, fn);
    }
  }
  if (!out.any) throw InvalidArgument("eps0/delta_x: every coefficient <f_j, x> is zero");
  return out;
}

}  // namespace

double eps0(const Frame& f, std::span<const double> x) {
  const auto c = nonzero_coefficients(f, x);
  return c.min_abs / c.max_norm;
}

double delta_x(const Frame& f, std::span<const double> x, double tau_value) {
  const auto c = nonzero_coefficients(f, x);
  const double l = f.max_column_norm();
  return 2.0 * tau_value / (l + tau_value) * c.min_abs;
}

double u_ratio(const Frame& f, std::span<const double> x, std::span<const double> y) {
  require_dim(f, x, "u_ratio");
  require_dim(f, y, "u_ratio");
  const double d = dist_d(x, y);
  if (d == 0.0) throw InvalidArgument("u_ratio: d(x, y) = 0, the ratio is undefined");
  const Vector ax = analysis_map(f, x), ay = analysis_map(f, y);
  double s = 0.0;
  for (std::size_t j = 0; j < ax.size(); ++j) s += (ax[j] - ay[j]) * (ax[j] - ay[j]);
  return std::sqrt(s) / d;
}

double v_ratio_factored(const Frame& f, std::span<const double> x, std::span<const double> y) {
  require_dim(f, x, "v_ratio");
  require_dim(f, y, "v_ratio");
  Vector w1(x.size()), w2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    w1[i] = x[i] - y[i];
    w2[i] = x[i] + y[i];
  }
  const double den = norm(w1) * norm(w2);
  if (den == 0.0) throw InvalidArgument("v_ratio: d1(x, y) = 0, the ratio is undefined");
  double s = 0.0;
  for (std::size_t j = 0; j < f.count(); ++j) {
    const double a = dot(f.column(j), w1), b = dot(f.column(j), w2);
    s += a * a * b * b;
  }
  return std::sqrt(s) / den;
}

double v_ratio(const Frame& f, std::span<const double> x, std::span<const double> y) {
  require_dim(f, x, "v_ratio");
  require_dim(f, y, "v_ratio");
  const double d1 = dist_d1(x, y);
  if (d1 == 0.0) throw InvalidArgument("v_ratio: d1(x, y) = 0, the ratio is undefined");
  const Vector ax = analysis_map_sq(f, x), ay = analysis_map_sq(f, y);
  double s = 0.0;
  for (std::size_t j = 0; j < ax.size(); ++j) s += (ax[j] - ay[j]) * (ax[j] - ay[j]);
  const double direct = std::sqrt(s) / d1;
  const double factored = v_ratio_factored(f, x, y);
  if (std::abs(direct - factored) > 1e-9 * std::max(1.0, direct)) {
    std::ostringstream os;
    os << "v_ratio: direct route " << direct << " and factored route " << factored << " disagree";
    throw NumericalError(os.str());
  }
  return direct;
}

FrameContext make_context(const Frame& f, const SubsetSearchConfig& cfg) {
  FrameContext ctx;
  ctx.bounds = frame_bounds(f);
  ctx.lowest_direction = lowest_eigvec(f.gram());
  std::tie(ctx.delta, ctx.omega) = delta_and_omega(f, cfg);
  try {
    ctx.tau = tau(f, cfg.budget, cfg.jobs);
  } catch (const Error&) {
    ctx.tau.reset();
  }
  return ctx;
}

namespace {

struct RayOutcome {
  double objective = 0.0;
  double scale = 0.0;
};

/// Evaluates rays w1 = s d for fixed x: alternates between S = S(w1, w2) and
/// the largest s on the boundary of the fixed-S quadratic constraint, then
/// keeps the largest s whose true constraint is satisfied.
class RaySearch {
 public:
  RaySearch(const Frame& f, std::span<const double> x, double eps, std::size_t max_iters)
      : f_(f), x_(x.begin(), x.end()), cx_(f.coefficients(x)), eps2_(eps * eps), max_iters_(max_iters) {}

  double constraint(const Vector& cd, double s) const {
    double c = 0.0;
    for (std::size_t j = 0; j < cd.size(); ++j) {
      const double a = s * cd[j];
      const double b = 2.0 * cx_[j] - a;
      c += std::min(a * a, b * b);
    }
    return c;
  }

  bool feasible(const Vector& cd, double s) const { return constraint(cd, s) <= eps2_ * (1.0 + 1e-12); }

  RayOutcome run(std::span<const double> d, double s0) const {
    const Vector cd = f_.coefficients(d);
    double a = 0.0;
    for (double c : cd) a += c * c;
    if (a == 0.0) return {};

    double best_s = 0.0;
    if (s0 > 0.0 && feasible(cd, s0)) best_s = s0;
    double s = s0 > 0.0 ? s0 : std::sqrt(eps2_ / a);
    double last_root = -1.0;
    std::vector<char> in(cd.size()), next(cd.size());
    auto membership = [&](double sv, std::vector<char>& out) {
      for (std::size_t j = 0; j < cd.size(); ++j) out[j] = std::abs(sv * cd[j]) <= std::abs(2.0 * cx_[j] - sv * cd[j]);
    };
    membership(s, in);
    for (std::size_t it = 0; it < max_iters_; ++it) {
      double b = 0.0, c = 0.0;
      for (std::size_t j = 0; j < cd.size(); ++j)
        if (!in[j]) {
          b -= 4.0 * cx_[j] * cd[j];
          c += 4.0 * cx_[j] * cx_[j];
        }
      const double disc = b * b - 4.0 * a * (c - eps2_);
      if (disc < 0.0) break;
      const double root = (-b + std::sqrt(disc)) / (2.0 * a);
      if (root <= 0.0) break;
      last_root = root;
      if (root > best_s && feasible(cd, root)) best_s = root;
      membership(root, next);
      if (next == in) break;
      in.swap(next);
    }
    if (last_root > best_s && !feasible(cd, last_root)) {
      double lo = best_s, hi = last_root;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(cd, mid) ? lo : hi) = mid;
      }
      best_s = lo;
    }
    // min(s, |2x - s d|) need not grow with s; also try the feasible
    // candidates s0, |x| and the balance point s = |x|^2 / <x,d>.
    RayOutcome best{objective(d, best_s), best_s};
    auto offer = [&](double sv) {
      if (!(sv > 0.0) || !feasible(cd, sv)) return;
      const double o = objective(d, sv);
      if (o > best.objective) best = {o, sv};
    };
    offer(s0);
    offer(std::sqrt(dot(x_, x_)));
    const double xd = dot(x_, d);
    if (xd > 0.0) offer(dot(x_, x_) / xd);
    return best;
  }

  double objective(std::span<const double> d, double s) const {
    double w2 = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double v = 2.0 * x_[i] - s * d[i];
      w2 += v * v;
    }
    return std::min(s, std::sqrt(w2));
  }

 private:
  const Frame& f_;
  Vector x_;
  Vector cx_;
  double eps2_;
  std::size_t max_iters_;
};

Vector null_direction(const Frame& f, const std::vector<std::size_t>& idx) {
  if (idx.empty()) {
    Vector e(f.dim(), 0.0);
    e[0] = 1.0;
    return e;
  }
  return lowest_eigvec(f.gram(idx));
}

void push_pm(std::vector<RayStart>& starts, const Vector& d, double scale) {
  if (norm(d) == 0.0) return;
  const Vector u = normalized(d);
  starts.push_back({u, scale});
  starts.push_back({scaled(-1.0, u), scale});
}

}  // namespace

StabilityReport q_eps_estimate(const Frame& f, std::span<const double> x, double eps, const QepsConfig& cfg) {
  return q_eps_estimate(f, make_context(f, cfg.subsets), x, eps, cfg);
}

StabilityReport q_eps_estimate(const Frame& f, const FrameContext& ctx, std::span<const double> x, double eps,
                               const QepsConfig& cfg, std::span<const RayStart> extra_starts) {
  require_dim(f, x, "q_eps_estimate");
  if (!(eps > 0.0)) throw InvalidArgument("q_eps_estimate: eps must be positive");
  if (norm(x) == 0.0) throw InvalidArgument("q_eps_estimate: x must be nonzero");
  const std::size_t n = f.dim();
  const RaySearch search(f, x, eps, cfg.max_iters);

  std::vector<RayStart> starts(extra_starts.begin(), extra_starts.end());
  const double sqrt_a = std::sqrt(ctx.bounds.lower);
  if (sqrt_a > 0.0) push_pm(starts, ctx.lowest_direction, eps / sqrt_a);
  {
    std::vector<std::size_t> in, out;
    split_mask(ctx.delta.subset, in, out);
    push_pm(starts, null_direction(f, in), 0.0);
    push_pm(starts, null_direction(f, out), 0.0);
    split_mask(ctx.omega.subset, in, out);
    push_pm(starts, null_direction(f, in), 0.0);
    push_pm(starts, null_direction(f, out), 0.0);
  }
  push_pm(starts, Vector(x.begin(), x.end()), 0.0);
  const std::size_t structured = starts.size();
  const std::size_t total = structured + cfg.restarts;

  struct Best {
    double objective = -1.0;
    Vector d;
    double scale = 0.0;
  };
  const auto parts = map_chunks<Best>(total, cfg.jobs, [&](std::uint64_t begin, std::uint64_t end) {
    Best best;
    for (std::uint64_t r = begin; r < end; ++r) {
      Rng rng(cfg.seed, {0x0E5, r});
      Vector d;
      double s0 = 0.0;
      if (r < structured) {
        d = starts[r].direction;
        s0 = starts[r].scale;
      } else {
        d = rng.unit_vector(n);
      }
      RayOutcome cur = search.run(d, s0);
      double step = 0.3;
      int fails = 0;
      for (std::size_t e = 0; e < cfg.local_evals && step > 1e-10; ++e) {
        const Vector g = rng.normal_vector(n);
        Vector nd = normalized(axpy(step, g, d));
        const RayOutcome cand = search.run(nd, cur.scale);
        if (cand.objective > cur.objective) {
          cur = cand;
          d = std::move(nd);
          step = std::min(1.0, step * 1.5);
          fails = 0;
        } else if (++fails >= 4) {
          step *= 0.5;
          fails = 0;
        }
      }
      if (cur.objective > best.objective) best = {cur.objective, d, cur.scale};
    }
    return best;
  });
  Best best;
  for (const auto& p : parts)
    if (p.objective > best.objective) best = p;

  StabilityReport rep;
  rep.x.assign(x.begin(), x.end());
  rep.eps = eps;
  StabilityWitness& w = rep.witness;
  w.w1 = scaled(best.scale, best.d);
  w.w2 = axpy(-1.0, w.w1, scaled(2.0, x));
  w.y = axpy(-1.0, x, w.w1);
  const Vector ax = analysis_map(f, x), ay = analysis_map(f, w.y);
  w.constraint = 0.0;
  for (std::size_t j = 0; j < ax.size(); ++j) w.constraint += (ax[j] - ay[j]) * (ax[j] - ay[j]);
  w.subset = SubsetMask(f.count());
  for (std::size_t j = 0; j < f.count(); ++j)
    if (std::abs(dot(f.column(j), w.w1)) <= std::abs(dot(f.column(j), w.w2))) w.subset.insert(j);
  rep.q_estimate = dist_d(x, w.y) / eps;

  const double xn = norm(x);
  rep.bracket_lower = sqrt_a > 0.0 ? std::min(1.0 / sqrt_a, xn / eps) : xn / eps;
  if (ctx.delta.value > 0.0) rep.bracket_upper = 1.0 / ctx.delta.value;
  if (ctx.tau && sqrt_a > 0.0 && eps < delta_x(f, x, ctx.tau->value)) rep.q_theory = 1.0 / sqrt_a;
  return rep;
}

QBrackets q_eps_brackets(const FrameContext& ctx, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("q_eps_brackets: eps must be positive");
  QBrackets b;
  b.lower = ctx.omega.value > 0.0 ? std::min(1.0 / eps, 1.0 / ctx.omega.value) : 1.0 / eps;
  if (ctx.delta.value > 0.0) {
    b.upper = 1.0 / ctx.delta.value;
    b.q_infinity = b.upper;
  } else {
    b.unbounded = true;
  }
  if (ctx.tau && ctx.omega.value > 0.0 && eps < ctx.tau->value) b.exact = 1.0 / ctx.omega.value;
  return b;
}

QBrackets q_eps_brackets(const Frame& f, double eps, const SubsetSearchConfig& cfg) {
  return q_eps_brackets(make_context(f, cfg), eps);
}

GlobalQEstimate q_eps_global_estimate(const Frame& f, const FrameContext& ctx, double eps, const QepsConfig& cfg) {
  const std::size_t n = f.dim();
  std::vector<std::pair<Vector, std::vector<RayStart>>> candidates;

  std::vector<std::size_t> in, out;
  // Construction attaining 1/omega: w1 = t v1 with |F_S^T v1| = omega,
  // w2 = s v2 with F_{S^c}^T v2 = 0 and |w1 + w2| = 2.
  if (ctx.omega.value > 0.0) {
    split_mask(ctx.omega.subset, in, out);
    const Vector v1 = lowest_eigvec(f.gram(in));
    const Vector v2 = null_direction(f, out);
    const double t = std::min(eps / ctx.omega.value, 1.0);
    const double c = dot(v1, v2);
    const double s = -t * c + std::sqrt(t * t * c * c - t * t + 4.0);
    Vector xb = scaled(0.5, axpy(s, v2, scaled(t, v1)));
    candidates.push_back({xb, {RayStart{v1, t}}});
  }
  // Construction attaining 1/Delta: x = (u + v)/2.
  {
    split_mask(ctx.delta.subset, in, out);
    const Vector u = null_direction(f, in);
    const Vector v = null_direction(f, out);
    const Vector xd = scaled(0.5, axpy(1.0, u, v));
    if (norm(xd) > 1e-12) candidates.push_back({normalized(xd), {}});
  }
  candidates.push_back({ctx.lowest_direction, {}});
  for (std::size_t j = 0; j < f.count(); ++j)
    if (f.column_norm(j) > 0.0) candidates.push_back({normalized(f.column(j)), {}});
  const std::size_t random_x = std::max<std::size_t>(cfg.restarts / 16, 4);
  for (std::size_t r = 0; r < random_x; ++r) candidates.push_back({Rng(cfg.seed, {0x6B0, r}).unit_vector(n), {}});

  QepsConfig inner = cfg;
  inner.restarts = std::max<std::size_t>(cfg.restarts / 4, 8);
  GlobalQEstimate best;
  best.q_estimate = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    inner.seed = Rng(cfg.seed, {0x6B1, i}).next_u64();
    StabilityReport rep = q_eps_estimate(f, ctx, candidates[i].first, eps, inner, candidates[i].second);
    if (rep.q_estimate > best.q_estimate) {
      best.q_estimate = rep.q_estimate;
      best.best = std::move(rep);
    }
  }
  return best;
}

WorstCaseWitness worst_case_witness(const Frame& f, const SubsetExtremum& d) {
  std::vector<std::size_t> in, out;
  split_mask(d.subset, in, out);
  const Vector u = null_direction(f, in);
  const Vector v = null_direction(f, out);
  WorstCaseWitness w;
  w.x = scaled(0.5, axpy(1.0, u, v));
  w.y = scaled(0.5, axpy(-1.0, v, u));
  w.eps = d.value;
  w.subset = d.subset;
  const double scale = std::sqrt(frame_bounds(f).upper);
  w.non_injective = d.value <= 1e-12 * std::max(scale, 1e-300);
  w.ratio = d.value > 0.0 ? dist_d(w.x, w.y) / d.value : kInf;
  return w;
}

WorstCaseWitness worst_case_witness(const Frame& f, const SubsetSearchConfig& cfg) {
  return worst_case_witness(f, delta(f, cfg));
}

StabilityConstants lipschitz_constants(const Frame& f, const ConstantsConfig& cfg) {
  const FrameContext ctx = make_context(f, cfg.subsets);
  const A0Result a = a0(f, cfg.search);
  const LambdaFResult lf = lambda_f(f, cfg.search);

  StabilityConstants c;
  c.A = ctx.bounds.lower;
  c.B = ctx.bounds.upper;
  c.sqrtA = std::sqrt(c.A);
  c.sqrtB = std::sqrt(c.B);
  c.a0 = a.a0;
  c.mu0 = std::sqrt(a.a0);
  c.Delta = ctx.delta.value;
  c.omega = ctx.omega.value;
  if (ctx.tau) {
    c.tau = ctx.tau->value;
    c.tau_subset = ctx.tau->subset;
  }
  c.lambdaF = lf.lambda_f;
  c.lambdaF_sq = lf.lambda_f * lf.lambda_f;
  c.rho_inf = c.Delta;
  c.rho0 = c.sqrtA;
  c.mu_inf = c.mu0;
  c.upperU = c.sqrtB;
  c.upperV = c.lambdaF_sq;
  c.exact = {ctx.delta.exact, ctx.omega.exact, ctx.tau.has_value(), a.exact, lf.exact};
  c.delta_subset = ctx.delta.subset;
  c.omega_subset = ctx.omega.subset;
  c.a0_x = a.x_star;
  c.a0_u = a.u_star;
  c.lambdaF_argmax = lf.argmax;

  const double tol = 1e-9 * std::max(1.0, c.B);
  auto check = [&](double lo, double hi, const char* what) {
    if (lo > hi + tol) {
      std::ostringstream os;
      os << "lipschitz_constants: chain violated, " << what << " (" << lo << " > " << hi << ")";
      throw NumericalError(os.str());
    }
  };
  check(c.Delta, c.omega, "Delta <= omega");
  check(c.omega, c.sqrtA, "omega <= sqrt(A)");
  check(c.sqrtA, c.sqrtB, "sqrt(A) <= sqrt(B)");
  check(c.mu0, c.lambdaF_sq, "mu0 <= Lambda_F^2");
  return c;
}

}  // namespace prstab
