#pragma once

#include <cstdint>
#include <initializer_list>

#include "prstab/linalg.hpp"

namespace prstab {

/// Counter-based generator: output i of stream `key` is
/// splitmix64_finalize(key + (i + 1) * 0x9E3779B97F4A7C15).
/// The key is derived from (seed, path...) by chained finalization, so any
/// (seed, trial, restart) triple maps to an independent, reproducible stream
/// regardless of the order in which streams are consumed.
///
/// Normals use Box-Muller on uniforms u = (bits >> 11) * 2^-53, with the
/// first uniform shifted to (0, 1].
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {});

  static std::uint64_t finalize(std::uint64_t z);

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Vector normal_vector(std::size_t n);
  /// Uniformly distributed point on the unit sphere in R^n.
  Vector unit_vector(std::size_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace prstab
