#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace pbrwp {

// Worker count: SAMPLER_THREADS caps it, default is all hardware cores.
inline int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("SAMPLER_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

// Static block partition of [0, n) over worker threads. Each index is
// processed by exactly one thread and writes only its own outputs, so the
// result is bit-identical to a sequential loop.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
  int workers = worker_count();
  if (n <= 1 || workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<int>(std::min<std::ptrdiff_t>(workers, n));
  std::ptrdiff_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    std::ptrdiff_t lo = w * chunk;
    std::ptrdiff_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([lo, hi, &fn] {
      for (std::ptrdiff_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace pbrwp
