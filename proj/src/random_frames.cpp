#include "prstab/random_frames.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "prstab/enumerate.hpp"
#include "prstab/error.hpp"
#include "prstab/injectivity.hpp"
#include "prstab/rng.hpp"

namespace prstab {

Frame gaussian_frame(const EnsembleSpec& spec, std::uint64_t trial, std::uint64_t draw) {
  if (spec.n == 0 || spec.m < spec.n) throw InvalidArgument("gaussian_frame: need n >= 1 and m >= n");
  Rng rng(spec.seed, {spec.n, spec.m, trial, draw});
  std::vector<Vector> cols(spec.m);
  for (auto& c : cols) {
    c = rng.normal_vector(spec.n);
    if (spec.scale == EnsembleScale::unit_columns) {
      const double len = norm(c);
      if (len == 0.0) throw NumericalError("gaussian_frame: zero column drawn");
      c = scaled(1.0 / len, c);
    } else {
      c = scaled(1.0 / std::sqrt(static_cast<double>(spec.n)), c);
    }
  }
  return Frame::from_columns(cols);
}

WitnessBound witness_bound_51(const Frame& f) {
  const std::size_t n = f.dim();
  if (f.count() < n + 1) throw InvalidArgument("witness_bound_51: needs at least n+1 columns");
  std::vector<std::size_t> first(n + 1);
  for (std::size_t j = 0; j <= n; ++j) first[j] = j;
  const Vector c = null_vector(f.submatrix(first));
  WitnessBound out;
  double l = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    l = std::max(l, f.column_norm(j));
    if (std::abs(c[j]) < std::abs(c[out.excluded_index])) out.excluded_index = j;
  }
  std::vector<std::size_t> g;
  for (std::size_t j = 0; j <= n; ++j)
    if (j != out.excluded_index) g.push_back(j);
  out.sigma_n_g = subset_sigma_n(f, g);
  out.bound = l / std::sqrt(static_cast<double>(n));
  out.holds = out.sigma_n_g <= out.bound + 1e-12;
  return out;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need at least two points");
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.slope * x[i] - fit.intercept;
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / k);
  return fit;
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<MedianRow> medians_by_n(const std::vector<ScalingRow>& rows, const std::string& statistic) {
  std::vector<std::size_t> order;
  std::map<std::size_t, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (r.statistic != statistic) continue;
    if (!groups.count(r.n)) order.push_back(r.n);
    groups[r.n].push_back(r.value);
  }
  std::vector<MedianRow> out;
  for (std::size_t n : order) out.push_back({n, statistic, median(groups[n])});
  return out;
}

namespace {

void add_fits(StudyResult& res, const std::string& statistic) {
  const auto med = medians_by_n(res.rows, statistic);
  std::vector<double> ns, logns, logv;
  for (const auto& m : med) {
    if (!(m.median > 0.0)) continue;
    ns.push_back(static_cast<double>(m.n));
    logns.push_back(std::log(static_cast<double>(m.n)));
    logv.push_back(std::log(m.median));
  }
  if (ns.size() >= 2) {
    res.fits.emplace_back("log_" + statistic + "_vs_n", fit_line(ns, logv));
    res.fits.emplace_back("log_" + statistic + "_vs_log_n", fit_line(logns, logv));
  }
}

void check_n_list(std::span<const std::size_t> n_list, std::size_t min_n) {
  if (n_list.empty()) throw InvalidArgument("study: n list is empty");
  for (std::size_t n : n_list)
    if (n < min_n) throw InvalidArgument("study: every n must be at least " + std::to_string(min_n));
}

}  // namespace

StudyResult minimal_redundancy_study(std::span<const std::size_t> n_list, const StudyConfig& cfg) {
  check_n_list(n_list, 2);
  if (cfg.trials == 0) throw InvalidArgument("study: trials must be >= 1");
  StudyResult res;
  for (std::size_t n : n_list) {
    const std::size_t m = 2 * n - 1;
    if (binomial(m, n) > cfg.subset_budget)
      throw BudgetExceeded("minimal redundancy study: C(" + std::to_string(m) + ", " + std::to_string(n) +
                           ") exceeds the subset budget");
    const EnsembleSpec spec{n, m, EnsembleScale::unit_columns, cfg.seed, cfg.trials};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      SparkOmega so;
      Frame f = gaussian_frame(spec, t, 0);
      for (std::uint64_t draw = 1;; ++draw) {
        so = omega_minimal_redundancy(f, cfg.subset_budget, cfg.jobs);
        if (so.full_spark) break;
        ++res.redraws;
        if (draw > 100) throw NumericalError("minimal redundancy study: no full-spark draw after 100 attempts");
        f = gaussian_frame(spec, t, draw);
      }
      const double w = so.omega->value;
      res.rows.push_back({n, m, t, "omega", w, true});
      if (n <= 6) {
        SubsetSearchConfig sc;
        sc.mode = SubsetMode::exact;
        sc.budget = cfg.subset_budget;
        sc.jobs = cfg.jobs;
        const double d = delta(f, sc).value;
        if (std::abs(d - w) > 1e-10 * std::max(1.0, w))
          throw NumericalError("minimal redundancy study: Delta differs from omega on a full-spark frame");
        res.rows.push_back({n, m, t, "Delta", d, true});
      }
      res.rows.push_back({n, m, t, "sigma_witness", witness_bound_51(f).sigma_n_g, true});
      res.rows.push_back({n, m, t, "omega_n1.5", w * std::pow(static_cast<double>(n), 1.5), true});
    }
  }
  for (const char* s : {"omega", "sigma_witness", "omega_n1.5"}) {
    auto med = medians_by_n(res.rows, s);
    res.medians.insert(res.medians.end(), med.begin(), med.end());
  }
  add_fits(res, "omega");
  return res;
}

StudyResult tau_scaling_study(std::span<const std::size_t> n_list, std::size_t k, const StudyConfig& cfg) {
  check_n_list(n_list, 1);
  if (cfg.trials == 0) throw InvalidArgument("study: trials must be >= 1");
  StudyResult res;
  const std::string scaled_name = "tau_scaled";
  for (std::size_t n : n_list) {
    const std::size_t m = n + k;
    if (binomial(m, n) > cfg.subset_budget)
      throw BudgetExceeded("tau study: C(" + std::to_string(m) + ", " + std::to_string(n) + ") exceeds the subset budget");
    const EnsembleSpec spec{n, m, EnsembleScale::unit_columns, cfg.seed, cfg.trials};
    const double power = static_cast<double>(k) - 0.5;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      std::optional<SubsetExtremum> tv;
      for (std::uint64_t draw = 0; !tv; ++draw) {
        if (draw > 100) throw NumericalError("tau study: no rank-n draw after 100 attempts");
        try {
          tv = tau(gaussian_frame(spec, t, draw), cfg.subset_budget, cfg.jobs);
        } catch (const InvalidArgument&) {
          ++res.redraws;
        }
      }
      res.rows.push_back({n, m, t, "tau", tv->value, true});
      res.rows.push_back({n, m, t, scaled_name, tv->value * std::pow(static_cast<double>(n), power), true});
    }
  }
  for (const std::string& s : {std::string("tau"), scaled_name}) {
    auto med = medians_by_n(res.rows, s);
    res.medians.insert(res.medians.end(), med.begin(), med.end());
  }
  add_fits(res, "tau");
  return res;
}

StudyResult redundancy_stability_study(double r0, std::span<const std::size_t> n_list, const StudyConfig& cfg) {
  if (!(r0 > 2.0) || !std::isfinite(r0)) throw InvalidArgument("redundancy study: r0 must be > 2");
  check_n_list(n_list, 1);
  if (cfg.trials == 0) throw InvalidArgument("study: trials must be >= 1");
  StudyResult res;
  for (std::size_t n : n_list) {
    const auto m = static_cast<std::size_t>(std::llround(r0 * static_cast<double>(n)));
    const EnsembleSpec spec{n, m, EnsembleScale::one_over_sqrt_n, cfg.seed, cfg.trials};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const Frame f = gaussian_frame(spec, t, 0);
      SubsetSearchConfig sc;
      sc.mode = SubsetMode::sampled;
      sc.budget = cfg.subset_budget;
      sc.samples = cfg.samples;
      sc.seed = Rng(cfg.seed, {0x5A, n, t}).next_u64();
      sc.jobs = cfg.jobs;
      const auto [d, w] = delta_and_omega(f, sc);
      res.rows.push_back({n, m, t, "Delta", d.value, false});
      res.rows.push_back({n, m, t, "omega", w.value, false});
      const bool exact_fits =
          m <= std::min<std::size_t>(cfg.exact_max_m, 24) && (std::uint64_t{1} << (m - 1)) <= cfg.subset_budget;
      if (exact_fits) {
        sc.mode = SubsetMode::exact;
        try {
          const auto [de, we] = delta_and_omega(f, sc);
          res.rows.push_back({n, m, t, "Delta", de.value, true});
          res.rows.push_back({n, m, t, "omega", we.value, true});
        } catch (const BudgetExceeded&) {
        }
      }
    }
  }
  // Medians are over the sampled rows so that every n is comparable.
  std::vector<ScalingRow> sampled;
  for (const auto& r : res.rows)
    if (!r.exact) sampled.push_back(r);
  for (const char* s : {"Delta", "omega"}) {
    auto med = medians_by_n(sampled, s);
    res.medians.insert(res.medians.end(), med.begin(), med.end());
  }
  StudyResult tmp;
  tmp.rows = sampled;
  add_fits(tmp, "omega");
  res.fits = tmp.fits;
  return res;
}

}  // namespace prstab
