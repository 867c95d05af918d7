#include "prstab/enumerate.hpp"

#include <limits>

#include "prstab/error.hpp"

namespace prstab {

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  unsigned __int128 r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > kMax) return kMax;
  }
  return static_cast<std::uint64_t>(r);
}

std::vector<std::size_t> unrank_combination(std::size_t m, std::size_t k, std::uint64_t rank) {
  if (rank >= binomial(m, k)) throw InvalidArgument("unrank_combination: rank out of range");
  std::vector<std::size_t> c;
  c.reserve(k);
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    for (std::size_t v = next;; ++v) {
      // Number of combinations that start with v at this slot.
      const std::uint64_t block = binomial(m - v - 1, k - slot - 1);
      if (rank < block) {
        c.push_back(v);
        next = v + 1;
        break;
      }
      rank -= block;
    }
  }
  return c;
}

bool next_combination(std::vector<std::size_t>& c, std::size_t m) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < m - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace prstab
