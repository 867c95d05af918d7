#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "prstab/frame.hpp"

namespace prstab {

/// Budgets and knobs shared by every non-convex search in the library.
struct SearchConfig {
  std::size_t restarts = 64;
  /// Number of polar grid points on [0, pi) for the n = 2 certified searches.
  std::size_t grid_density = 4096;
  std::size_t max_iters = 2000;
  /// Stop when the Riemannian gradient norm falls below this value.
  double tol = 1e-10;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

inline constexpr std::uint64_t kDefaultPartitionBudget = std::uint64_t{1} << 23;  // m <= 24
inline constexpr std::uint64_t kDefaultSubsetBudget = 10'000'000;

struct PartitionCheck {
  bool holds = false;
  std::optional<SubsetMask> witness;
};

/// Exact complement-property test over all 2^(m-1) partitions {S, S^c}
/// (index m-1 always lies in S^c). The witness is the smallest violating S.
/// Throws BudgetExceeded when 2^(m-1) > budget.
PartitionCheck complement_property(const Frame& f, std::uint64_t budget = kDefaultPartitionBudget, unsigned jobs = 1);

/// Every n-subset linearly independent. The witness is the first deficient
/// n-subset in lexicographic order. Throws BudgetExceeded when C(m, n) > budget.
PartitionCheck full_spark(const Frame& f, std::uint64_t budget = kDefaultSubsetBudget, unsigned jobs = 1);

/// R(x) = sum_j <x, f_j>^2 f_j f_j^T.
Matrix r_matrix(const Frame& f, std::span<const double> x);

struct A0Result {
  double a0 = 0.0;
  Vector x_star;
  Vector u_star;
  /// True for n <= 2, where the polar grid plus refinement certifies the value.
  bool exact = false;
  /// False when the best restart stopped on the iteration cap.
  bool converged = true;
  /// Rigorous lower bound from the grid Lipschitz estimate (n <= 2 only).
  std::optional<double> certified_lower;
};

/// min over unit x of lambda_min(R(x)). For n >= 3 the value is the best of a
/// multi-start descent and hence an upper bound on the true minimum.
A0Result a0(const Frame& f, const SearchConfig& cfg = {});

/// Scale used to normalise a0 for the verdict: sum_j ||f_j||^4 / m.
double a0_scale(const Frame& f);

enum class CertificateMethod { complement, full_spark, a0_positive };
std::string to_string(CertificateMethod m);

struct Certificate {
  bool retrievable = false;
  CertificateMethod method = CertificateMethod::complement;
  std::optional<SubsetMask> witness;
  double a0 = 0.0;
  double a0_normalized = 0.0;
  Vector x_star;
  Vector u_star;
  /// The verdict came from an exhaustive combinatorial check.
  bool exact = false;
  bool a0_exact = false;
  std::optional<bool> complement_holds;
  std::optional<bool> full_spark_holds;
  bool a0_positive = false;
};

struct CertifyConfig {
  SearchConfig search;
  std::uint64_t partition_budget = kDefaultPartitionBudget;
  std::uint64_t spark_budget = kDefaultSubsetBudget;
  /// a0 / a0_scale above this is "positive".
  double verdict_threshold = 1e-8;
};

/// Runs the complement property (when enumerable) and the a0 search, and for
/// m = 2n - 1 the full-spark test. Disagreeing verdicts raise NumericalError.
Certificate phase_retrievable(const Frame& f, const CertifyConfig& cfg = {});

}  // namespace prstab
