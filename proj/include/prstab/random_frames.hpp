#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prstab/frame.hpp"
#include "prstab/robustness.hpp"

namespace prstab {

enum class EnsembleScale { unit_columns, one_over_sqrt_n };

struct EnsembleSpec {
  std::size_t n = 2;
  std::size_t m = 3;
  EnsembleScale scale = EnsembleScale::unit_columns;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
};

/// I.i.d. N(0,1) entries from Rng(seed, {n, m, trial, draw}), then columns
/// normalised or the whole matrix scaled by 1/sqrt(n). `draw` counts redraws.
Frame gaussian_frame(const EnsembleSpec& spec, std::uint64_t trial, std::uint64_t draw = 0);

struct WitnessBound {
  double sigma_n_g = 0.0;
  double bound = 0.0;
  bool holds = false;
  std::size_t excluded_index = 0;
};

/// Null vector c of the first n+1 columns; dropping argmin |c_j| leaves G
/// with sigma_n(G) <= L / sqrt(n), L the largest of those n+1 norms.
WitnessBound witness_bound_51(const Frame& f);

struct ScalingRow {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::string statistic;  // omega, Delta, tau, sigma_witness
  double value = 0.0;
  bool exact = false;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
};

/// Least squares y = slope * x + intercept.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

struct MedianRow {
  std::size_t n = 0;
  std::string statistic;
  double median = 0.0;
};

struct StudyResult {
  std::vector<ScalingRow> rows;
  std::vector<MedianRow> medians;
  /// Named fits, e.g. "log_omega_vs_n".
  std::vector<std::pair<std::string, LinearFit>> fits;
  std::size_t redraws = 0;  // frames discarded for lacking full spark
};

double median(std::vector<double> v);
/// Median of `statistic` at each n, in the order of first appearance.
std::vector<MedianRow> medians_by_n(const std::vector<ScalingRow>& rows, const std::string& statistic);

struct StudyConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 10;
  std::uint64_t subset_budget = kDefaultSubsetBudget;
  std::uint64_t samples = 4000;
  unsigned jobs = 1;
  /// Redundancy study: exact Delta and omega only for m up to this.
  std::size_t exact_max_m = 16;
};

/// Unit-column frames with m = 2n-1: exact omega (full-spark shortcut) and
/// the witness bound per trial; Delta = omega is checked exhaustively for
/// n <= 6. Fits log(median omega) against n and against log n.
StudyResult minimal_redundancy_study(std::span<const std::size_t> n_list, const StudyConfig& cfg);

/// Unit-column n x (n+k) frames: exact tau and tau * n^(k - 1/2).
StudyResult tau_scaling_study(std::span<const std::size_t> n_list, std::size_t k, const StudyConfig& cfg);

/// F = G / sqrt(n), m = round(r0 n), r0 > 2: sampled Delta and omega, plus
/// exact values when m <= min(cfg.exact_max_m, 24) and 2^(m-1) fits the budget.
StudyResult redundancy_stability_study(double r0, std::span<const std::size_t> n_list, const StudyConfig& cfg);

}  // namespace prstab
