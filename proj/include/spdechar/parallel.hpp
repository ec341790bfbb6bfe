#pragma once
#include <thread>
#include <vector>
#include <functional>

namespace spdechar {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Split [0,n) into contiguous chunks, one per worker. Workers write to
/// disjoint index ranges only; reductions stay with the caller so results
/// do not depend on the thread count.
inline void parallel_for(int n, int threads,
                         const std::function<void(int, int)>& body) {
  const int nt = std::min(resolve_threads(threads), std::max(n, 1));
  if (nt <= 1 || n <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt));
  const int chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

/// Pairwise (cascade) summation: deterministic and more accurate than a
/// running sum; used for all Monte Carlo reductions.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = x[0];
    for (std::size_t i = 1; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace spdechar
