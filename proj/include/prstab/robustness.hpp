#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "prstab/frame.hpp"
#include "prstab/injectivity.hpp"

namespace prstab {

enum class SubsetMode { automatic, exact, sampled };

/// Controls the combinatorial searches behind Delta and omega.
struct SubsetSearchConfig {
  SubsetMode mode = SubsetMode::automatic;
  /// Largest number of subsets an exact enumeration may visit.
  std::uint64_t budget = kDefaultSubsetBudget;
  /// Number of subset evaluations a sampled search may spend.
  std::uint64_t samples = 4000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct SubsetExtremum {
  double value = 0.0;
  SubsetMask subset;
  bool exact = false;
};

/// Delta = min_S sqrt(A[S] + A[S^c]). The returned subset is the
/// representative of {S, S^c} not containing index m-1. Sampled mode returns
/// an upper bound.
SubsetExtremum delta(const Frame& f, const SubsetSearchConfig& cfg = {});

/// omega = min sigma_n(F_S) over S with rank(F_{S^c}) < n. The returned
/// subset is S. Sampled mode returns an upper bound.
SubsetExtremum omega(const Frame& f, const SubsetSearchConfig& cfg = {});

/// Delta and omega together; the sampled paths share one omega search and
/// Delta is capped by omega.
std::pair<SubsetExtremum, SubsetExtremum> delta_and_omega(const Frame& f, const SubsetSearchConfig& cfg = {});

struct SparkOmega {
  bool full_spark = false;
  std::optional<SubsetExtremum> omega;  // set only when full_spark
};

/// For m = 2n - 1: a single pass over the n-subsets decides full spark and,
/// when it holds, gives omega (its complements have exactly n-1 elements).
SparkOmega omega_minimal_redundancy(const Frame& f, std::uint64_t budget = kDefaultSubsetBudget, unsigned jobs = 1);

/// tau = min sigma_n(F_S) over rank-n subsets, attained on n-subsets. Throws
/// InvalidArgument when no n-subset has rank n.
SubsetExtremum tau(const Frame& f, std::uint64_t budget = kDefaultSubsetBudget, unsigned jobs = 1);

struct LambdaFResult {
  double lambda_f = 0.0;  // (max_{|x|=1} sum <x,f_k>^4)^(1/4)
  Vector argmax;
  double fourth_power_max = 0.0;   // route 1: max sum <x,f_k>^4
  double r_matrix_max = 0.0;       // route 2: max lambda_max(R(x)), also Lambda_F^4
  bool exact = false;              // n <= 2
};

LambdaFResult lambda_f(const Frame& f, const SearchConfig& cfg = {});

/// min_{k in S} |<f_k, x>| / max_{k in S} ||f_k|| over S = {k : <f_k, x> != 0}.
double eps0(const Frame& f, std::span<const double> x);
/// (2 tau / (max ||f_j|| + tau)) * min{|<f_j, x>| : <f_j, x> != 0}.
double delta_x(const Frame& f, std::span<const double> x, double tau_value);

/// ||alpha(x) - alpha(y)|| / d(x, y).
double u_ratio(const Frame& f, std::span<const double> x, std::span<const double> y);
/// ||alpha^2(x) - alpha^2(y)|| / d1(x, y), checked against the factored
/// form with w1 = x - y, w2 = x + y.
double v_ratio(const Frame& f, std::span<const double> x, std::span<const double> y);
/// (sum <f_j,w1>^2 <f_j,w2>^2)^(1/2) / (||w1|| ||w2||).
double v_ratio_factored(const Frame& f, std::span<const double> x, std::span<const double> y);

/// Precomputed frame quantities reused by the stability searches.
struct FrameContext {
  FrameBounds bounds;
  Vector lowest_direction;  // unit eigenvector of FF^T for A
  SubsetExtremum delta;
  SubsetExtremum omega;
  std::optional<SubsetExtremum> tau;
};

FrameContext make_context(const Frame& f, const SubsetSearchConfig& cfg = {});

struct QepsConfig {
  std::size_t restarts = 128;
  std::size_t max_iters = 200;
  /// Direction perturbations tried per restart by the local search.
  std::size_t local_evals = 120;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  SubsetSearchConfig subsets;
};

struct StabilityWitness {
  Vector w1;
  Vector w2;
  Vector y;
  SubsetMask subset;  // S(w1, w2) = {j : |<f_j,w1>| <= |<f_j,w2>|}
  double constraint = 0.0;  // ||alpha(x) - alpha(y)||^2
};

struct StabilityReport {
  Vector x;
  double eps = 0.0;
  double q_estimate = 0.0;  // feasible, so a lower bound on Q_eps(x)
  std::optional<double> q_theory;
  double bracket_lower = 0.0;
  std::optional<double> bracket_upper;  // empty when Delta = 0
  StabilityWitness witness;
};

/// A starting point for the Q_eps search: w1 = scale * direction.
struct RayStart {
  Vector direction;
  double scale = 0.0;
};

/// Multi-start alternating maximisation of min(|w1|, |w2|) / eps subject to
/// (w1 + w2)/2 = x and sum_j min(<f_j,w1>^2, <f_j,w2>^2) <= eps^2.
StabilityReport q_eps_estimate(const Frame& f, std::span<const double> x, double eps, const QepsConfig& cfg = {});
StabilityReport q_eps_estimate(const Frame& f, const FrameContext& ctx, std::span<const double> x, double eps,
                               const QepsConfig& cfg, std::span<const RayStart> extra_starts = {});

struct QBrackets {
  double lower = 0.0;                  // min(1/eps, 1/omega)
  std::optional<double> upper;         // 1/Delta; empty when unbounded
  std::optional<double> exact;         // 1/omega when eps < tau
  std::optional<double> q_infinity;    // 1/Delta
  bool unbounded = false;
};

QBrackets q_eps_brackets(const Frame& f, double eps, const SubsetSearchConfig& cfg = {});
QBrackets q_eps_brackets(const FrameContext& ctx, double eps);

struct GlobalQEstimate {
  double q_estimate = 0.0;
  StabilityReport best;
};

/// Lower bound on q_eps = max over unit x of Q_eps(x). Candidate x include
/// the constructions that attain 1/omega and 1/Delta plus random unit vectors.
GlobalQEstimate q_eps_global_estimate(const Frame& f, const FrameContext& ctx, double eps, const QepsConfig& cfg = {});

struct WorstCaseWitness {
  Vector x;
  Vector y;
  double eps = 0.0;        // Delta
  double ratio = 0.0;      // d(x, y) / eps, infinite when Delta = 0
  bool non_injective = false;
  SubsetMask subset;
};

WorstCaseWitness worst_case_witness(const Frame& f, const SubsetSearchConfig& cfg = {});
WorstCaseWitness worst_case_witness(const Frame& f, const SubsetExtremum& delta_result);

struct ExactnessFlags {
  bool delta = false;
  bool omega = false;
  bool tau = false;
  bool a0 = false;
  bool lambda_f = false;
};

struct StabilityConstants {
  double A = 0.0;
  double B = 0.0;
  double sqrtA = 0.0;
  double sqrtB = 0.0;
  double a0 = 0.0;
  double mu0 = 0.0;
  double Delta = 0.0;
  double omega = 0.0;
  std::optional<double> tau;
  double lambdaF = 0.0;
  double lambdaF_sq = 0.0;
  // Closed forms of the Lipschitz families.
  double rho_inf = 0.0;  // Delta
  double rho0 = 0.0;     // sqrt(A)
  double mu_inf = 0.0;   // sqrt(a0)
  double upperU = 0.0;   // sqrt(B)
  double upperV = 0.0;   // Lambda_F^2
  ExactnessFlags exact;
  SubsetMask delta_subset;
  SubsetMask omega_subset;
  std::optional<SubsetMask> tau_subset;
  Vector a0_x;
  Vector a0_u;
  Vector lambdaF_argmax;
};

struct ConstantsConfig {
  SearchConfig search;
  SubsetSearchConfig subsets;
};

/// Assembles every constant and checks Delta <= omega <= sqrt(A) <= sqrt(B)
/// and mu0 <= Lambda_F^2; a violation raises NumericalError.
StabilityConstants lipschitz_constants(const Frame& f, const ConstantsConfig& cfg = {});

}  // namespace prstab
