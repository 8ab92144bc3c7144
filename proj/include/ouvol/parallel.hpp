#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace ouvol {

/**
 * Runs body(lo, hi) over a partition of [0, n).  Work items must be
 * independent and write only to their own slots, so the result does not
 * depend on the thread count.  max_threads <= 1 runs inline.
 */
template <typename Body>
void parallel_chunks(long n, int max_threads, Body&& body) {
  if (n <= 0) return;
  long hw = static_cast<long>(std::thread::hardware_concurrency());
  long want = std::min<long>(std::max(1, max_threads), std::max<long>(1, hw));
  long threads = std::min(want, n);
  if (threads <= 1) {
    body(0L, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const long chunk = (n + threads - 1) / threads;
  for (long t = 0; t < threads; ++t) {
    const long lo = t * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ouvol
