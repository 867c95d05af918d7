#include "prstab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prstab/enumerate.hpp"
#include "prstab/error.hpp"
#include "prstab/rng.hpp"

namespace prstab {

Vector canonicalize(std::span<const double> x) {
  for (double v : x) {
    if (v > 0.0) return Vector(x.begin(), x.end());
    if (v < 0.0) return scaled(-1.0, x);
  }
  return Vector(x.size(), 0.0);
}

NoiseModel::NoiseModel(double s) : sigma(s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("noise: sigma must be positive and finite");
}

Vector noiseless_measurements(const Frame& f, std::span<const double> x) {
  require_dim(f, x, "measurements");
  return analysis_map_sq(f, x);
}

Vector simulate_measurements(const Frame& f, std::span<const double> x, const NoiseModel& noise, std::uint64_t seed,
                             std::uint64_t trial) {
  Vector y = noiseless_measurements(f, x);
  Rng rng(seed, {trial});
  for (double& v : y) v += noise.sigma * rng.normal();
  return y;
}

Matrix fisher_info(const Frame& f, std::span<const double> x, double sigma) {
  require_dim(f, x, "fisher_info");
  if (!(sigma > 0.0)) throw InvalidArgument("fisher_info: sigma must be positive");
  if (norm(x) == 0.0) throw InvalidArgument("fisher_info: x must be nonzero");
  return (4.0 / (sigma * sigma)) * r_matrix(f, x);
}

EmpiricalFisher fisher_empirical(const Frame& f, std::span<const double> x, double sigma, std::size_t trials,
                                 std::uint64_t seed, unsigned jobs) {
  require_dim(f, x, "fisher_empirical");
  if (trials == 0) throw InvalidArgument("fisher_empirical: trials must be >= 1");
  const NoiseModel noise(sigma);
  const std::size_t n = f.dim();
  const Vector c = f.coefficients(x);
  struct Sums {
    Matrix s1, s2;
  };
  const auto parts = map_chunks<Sums>(trials, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    Sums s{Matrix(n, n), Matrix(n, n)};
    Vector score(n);
    for (std::uint64_t t = begin; t < end; ++t) {
      const Vector y = simulate_measurements(f, x, noise, seed, t);
      std::fill(score.begin(), score.end(), 0.0);
      for (std::size_t k = 0; k < f.count(); ++k) {
        const double w = 2.0 * (y[k] - c[k] * c[k]) * c[k] / (sigma * sigma);
        for (std::size_t i = 0; i < n; ++i) score[i] += w * f.column(k)[i];
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double p = score[i] * score[j];
          s.s1(i, j) += p;
          s.s2(i, j) += p * p;
        }
    }
    return s;
  });
  Matrix s1(n, n), s2(n, n);
  for (const auto& p : parts) {
    s1 = s1 + p.s1;
    s2 = s2 + p.s2;
  }
  EmpiricalFisher out{Matrix(n, n), Matrix(n, n), trials};
  const double t = static_cast<double>(trials);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double mean = s1(i, j) / t;
      const double var = std::max(0.0, s2(i, j) / t - mean * mean);
      out.mean(i, j) = mean;
      out.standard_error(i, j) = std::sqrt(var / t);
    }
  return out;
}

CrlbResult crlb(const Frame& f, std::span<const double> x, double sigma, double a0_value, bool a0_exact) {
  require_dim(f, x, "crlb");
  if (!(sigma > 0.0)) throw InvalidArgument("crlb: sigma must be positive");
  const double xn = norm(x);
  if (xn == 0.0) throw InvalidArgument("crlb: x must be nonzero");
  const Matrix r = r_matrix(f, x);
  Matrix inv;
  try {
    inv = sym_inverse(r);
  } catch (const NumericalError&) {
    throw NumericalError("crlb: R(x) is singular (x in a blind spot or frame not phase retrievable)");
  }
  CrlbResult out;
  out.matrix = (sigma * sigma / 4.0) * inv;
  out.trace = trace(out.matrix);
  out.a0 = a0_value;
  out.a0_exact = a0_exact;
  const double n = static_cast<double>(f.dim());
  out.mse_upper = a0_value > 0.0 ? n * sigma * sigma / (4.0 * a0_value * xn * xn) : std::numeric_limits<double>::infinity();
  return out;
}

CrlbResult crlb(const Frame& f, std::span<const double> x, double sigma, const SearchConfig& search) {
  const A0Result a = a0(f, search);
  return crlb(f, x, sigma, a.a0, a.exact);
}

namespace {

double ls_objective(const Frame& f, std::span<const double> y, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.count(); ++k) {
    const double c = dot(f.column(k), x);
    const double r = c * c - y[k];
    s += r * r;
  }
  return s;
}

/// Descent from x0 with Armijo backtracking. Uses the Gauss-Newton direction
/// -R(x)^{-1} grad / 8 when R(x) is well conditioned, else -grad.
Vector ls_descend(const Frame& f, std::span<const double> y, Vector x, const LsConfig& cfg, double& obj) {
  const std::size_t n = f.dim();
  obj = ls_objective(f, y, x);
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    Vector g(n, 0.0);
    for (std::size_t k = 0; k < f.count(); ++k) {
      const double c = dot(f.column(k), x);
      const double w = 4.0 * (c * c - y[k]) * c;
      for (std::size_t i = 0; i < n; ++i) g[i] += w * f.column(k)[i];
    }
    const double gn = norm(g);
    if (gn == 0.0) break;
    // Gauss-Newton: J^T J = 4 R(x), J^T r = g / 2.
    Vector dir = scaled(-1.0, g);
    bool newton = false;
    try {
      const Matrix inv = sym_inverse(r_matrix(f, x), 1e-10);
      dir = scaled(-1.0 / 8.0, inv * std::span<const double>(g));
      newton = dot(dir, g) < 0.0;
      if (!newton) dir = scaled(-1.0, g);
    } catch (const NumericalError&) {
    }
    double step = newton ? 1.0 : 1.0 / std::max(gn, 1e-300) * std::max(norm(x), 1e-3);
    const double slope = dot(dir, g);
    bool progress = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vector cand = axpy(step, dir, x);
      const double co = ls_objective(f, y, cand);
      if (co <= obj + 1e-4 * step * slope) {
        progress = obj - co > cfg.tol * obj;
        x = std::move(cand);
        obj = co;
        break;
      }
      step *= 0.5;
    }
    if (!progress || obj == 0.0) break;
  }
  return x;
}

}  // namespace

LsResult ls_estimate(const Frame& f, std::span<const double> y, const LsConfig& cfg) {
  if (y.size() != f.count()) throw InvalidArgument("ls_estimate: measurement vector length differs from frame count");
  const std::size_t n = f.dim();
  LsResult best;
  best.x.assign(n, 0.0);
  double best_obj = ls_objective(f, y, best.x);

  Matrix s(n, n);
  for (std::size_t k = 0; k < f.count(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s(i, j) += y[k] * f.column(k)[i] * f.column(k)[j];
  const Vector v = sym_eig(s).vector(0);
  // Scale t with t^2 = sum a_k y_k / sum a_k^2, a_k = <v,f_k>^2.
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < f.count(); ++k) {
    const double c = dot(f.column(k), v);
    num += c * c * y[k];
    den += c * c * c * c;
  }
  const double t2 = den > 0.0 ? num / den : 0.0;
  const double t = std::sqrt(std::max(t2, 0.0));

  auto consider = [&](Vector x0) {
    double obj = 0.0;
    Vector x = ls_descend(f, y, std::move(x0), cfg, obj);
    if (obj < best_obj) {
      best_obj = obj;
      best.x = std::move(x);
    }
  };
  if (t > 0.0) {
    consider(scaled(t, v));
    const double radius = t;
    for (std::size_t r = 1; r < cfg.restarts; ++r) consider(scaled(radius, Rng(cfg.seed, {0x15, r}).unit_vector(n)));
  }
  best.x = canonicalize(best.x);
  best.residual = std::sqrt(best_obj);
  return best;
}

EstimationRun mse_monte_carlo(const Frame& f, std::span<const double> x, double sigma, std::size_t trials,
                              std::uint64_t seed, unsigned jobs, const LsConfig& ls) {
  require_dim(f, x, "mse_monte_carlo");
  if (trials == 0) throw InvalidArgument("mse_monte_carlo: trials must be >= 1");
  const NoiseModel noise(sigma);
  const CrlbResult bound = crlb(f, x, sigma);
  const std::size_t n = f.dim();

  EstimationRun run;
  run.trials = trials;
  run.seed = seed;
  run.sigma = sigma;
  run.x_true = canonicalize(x);
  run.crlb_trace = bound.trace;
  run.mse_upper = bound.mse_upper;

  struct Chunk {
    std::vector<TrialRecord> records;
    std::vector<Vector> estimates;
  };
  const auto parts = map_chunks<Chunk>(trials, jobs, [&](std::uint64_t begin, std::uint64_t end) {
    Chunk c;
    for (std::uint64_t t = begin; t < end; ++t) {
      const Vector y = simulate_measurements(f, x, noise, seed, t);
      LsConfig cfg = ls;
      cfg.seed = Rng(seed, {t, 0x15}).next_u64();
      LsResult est = ls_estimate(f, y, cfg);
      c.records.push_back({t, est.residual, dist_d(est.x, x)});
      c.estimates.push_back(std::move(est.x));
    }
    return c;
  });
  run.bias.assign(n, 0.0);
  double sum_sq = 0.0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.records.size(); ++i) {
      sum_sq += p.records[i].distance * p.records[i].distance;
      for (std::size_t k = 0; k < n; ++k) run.bias[k] += p.estimates[i][k];
      run.records.push_back(p.records[i]);
    }
  }
  const double tt = static_cast<double>(trials);
  run.mse = sum_sq / tt;
  for (std::size_t k = 0; k < n; ++k) run.bias[k] = run.bias[k] / tt - run.x_true[k];
  return run;
}

}  // namespace prstab
