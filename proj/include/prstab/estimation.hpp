#pragma once

#include <cstdint>

#include "prstab/frame.hpp"
#include "prstab/injectivity.hpp"

namespace prstab {

/// x if its first nonzero coordinate is positive, otherwise -x.
Vector canonicalize(std::span<const double> x);

/// Additive white Gaussian noise on the squared magnitudes.
struct NoiseModel {
  double sigma = 1.0;

  /// Throws InvalidArgument unless sigma > 0 and finite.
  explicit NoiseModel(double s);
};

/// y = alpha^2(x) + nu, nu drawn from the stream Rng(seed, {trial}).
Vector simulate_measurements(const Frame& f, std::span<const double> x, const NoiseModel& noise, std::uint64_t seed,
                             std::uint64_t trial = 0);
/// y = alpha^2(x).
Vector noiseless_measurements(const Frame& f, std::span<const double> x);

/// (4 / sigma^2) R(x). Throws InvalidArgument for x = 0 or sigma <= 0.
Matrix fisher_info(const Frame& f, std::span<const double> x, double sigma);

struct EmpiricalFisher {
  Matrix mean;             // average of score * score^T
  Matrix standard_error;   // per entry
  std::size_t trials = 0;
};

/// Monte Carlo estimate of E[score score^T] with
/// score = (2 / sigma^2) sum_k (y_k - <x,f_k>^2) <x,f_k> f_k.
EmpiricalFisher fisher_empirical(const Frame& f, std::span<const double> x, double sigma, std::size_t trials,
                                 std::uint64_t seed, unsigned jobs = 1);

struct CrlbResult {
  Matrix matrix;          // (sigma^2 / 4) R(x)^{-1}
  double trace = 0.0;
  double mse_upper = 0.0; // n sigma^2 / (4 a0 |x|^2)
  double a0 = 0.0;
  bool a0_exact = false;
};

/// Throws NumericalError when R(x) is singular.
CrlbResult crlb(const Frame& f, std::span<const double> x, double sigma, const SearchConfig& search = {});
/// Same, with a0 supplied by the caller.
CrlbResult crlb(const Frame& f, std::span<const double> x, double sigma, double a0_value, bool a0_exact);

struct LsConfig {
  std::size_t restarts = 32;
  std::size_t max_iters = 3000;
  double tol = 1e-14;
  std::uint64_t seed = 0;
};

struct LsResult {
  Vector x;               // canonical
  double residual = 0.0;  // |y - alpha^2(x)|
};

/// Multi-start gradient descent on |y - alpha^2(x)|^2. The first start is the
/// spectral one: top eigenvector of sum_k y_k f_k f_k^T with the best scale.
LsResult ls_estimate(const Frame& f, std::span<const double> y, const LsConfig& cfg = {});

struct TrialRecord {
  std::size_t trial = 0;
  double residual = 0.0;
  double distance = 0.0;  // d(xhat, x)
};

struct EstimationRun {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  Vector x_true;          // canonical
  double mse = 0.0;       // mean d(xhat, x)^2
  double crlb_trace = 0.0;
  double mse_upper = 0.0;
  Vector bias;            // mean(xhat) - x_true, both canonical
  std::vector<TrialRecord> records;
};

EstimationRun mse_monte_carlo(const Frame& f, std::span<const double> x, double sigma, std::size_t trials,
                              std::uint64_t seed, unsigned jobs = 1, const LsConfig& ls = {});

}  // namespace prstab
