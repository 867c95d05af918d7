#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace prstab {

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k);

/// The combination of rank `rank` (0-based) among all k-subsets of
/// {0..m-1} in lexicographic order.
std::vector<std::size_t> unrank_combination(std::size_t m, std::size_t k, std::uint64_t rank);

/// Advances to the next k-subset in lexicographic order; false when done.
bool next_combination(std::vector<std::size_t>& c, std::size_t m);

/// 0 means "use hardware concurrency".
unsigned resolve_jobs(unsigned jobs);

/// Splits [0, total) into a fixed number of contiguous chunks (independent
/// of `jobs`), runs fn(begin, end) on up to `jobs` worker threads and
/// returns the per-chunk results in chunk order. Callers reduce the vector
/// serially, so results never depend on the worker count.
template <class Result, class Fn>
std::vector<Result> map_chunks(std::uint64_t total, unsigned jobs, Fn&& fn) {
  constexpr std::uint64_t kMaxChunks = 256;
  const std::uint64_t chunks = std::max<std::uint64_t>(1, std::min(total, kMaxChunks));
  std::vector<Result> results(chunks);
  const auto bounds = [&](std::uint64_t c) {
    return std::pair<std::uint64_t, std::uint64_t>{total * c / chunks, total * (c + 1) / chunks};
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(resolve_jobs(jobs), chunks));
  if (workers <= 1) {
    for (std::uint64_t c = 0; c < chunks; ++c) {
      const auto [b, e] = bounds(c);
      results[c] = fn(b, e);
    }
    return results;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::uint64_t c = next.fetch_add(1);
        if (c >= chunks) return;
        try {
          const auto [b, e] = bounds(c);
          results[c] = fn(b, e);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace prstab
