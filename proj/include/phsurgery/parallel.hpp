#pragma once

// Index-parallel loops with deterministic results: every task writes only its
// own slot, and merging happens afterwards in index order.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace phsurgery {

/// Worker count: PHSURGERY_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHSURGERY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return std::min<unsigned>(static_cast<unsigned>(v), hw * 4);
    } catch (...) {
    }
  }
  return hw;
}

/// Runs body(i) for i in [0, n). An exception from any index is rethrown
/// after all workers finish; the lowest failing index wins.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::size_t> failed_at(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[w] = std::current_exception();
          failed_at[w] = i;
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  std::size_t first = n;
  std::exception_ptr err;
  for (unsigned w = 0; w < workers; ++w)
    if (errors[w] && failed_at[w] < first) {
      first = failed_at[w];
      err = errors[w];
    }
  if (err) std::rethrow_exception(err);
}

}  // namespace phsurgery
