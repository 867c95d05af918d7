#pragma once

#include <cstdint>
#include <vector>

#include "prstab/frame.hpp"
#include "prstab/rng.hpp"

namespace testing_util {

/// n x m frame with i.i.d. N(0,1) entries.
inline prstab::Frame gaussian(std::size_t n, std::size_t m, std::uint64_t seed, std::uint64_t index = 0) {
  prstab::Rng rng(seed, {0x7E57, n, m, index});
  std::vector<prstab::Vector> cols(m);
  for (auto& c : cols) c = rng.normal_vector(n);
  return prstab::Frame::from_columns(cols);
}

inline prstab::Frame from_cols(std::vector<prstab::Vector> cols) { return prstab::Frame::from_columns(cols); }

}  // namespace testing_util
