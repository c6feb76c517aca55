#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace cdrgeo {

/// Runs f(i) for i in [0, n) over contiguous chunks on `workers` threads.
/// f must only write to per-index state.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &f] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
}

}  // namespace cdrgeo
