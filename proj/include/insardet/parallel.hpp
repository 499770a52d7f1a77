#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace insardet {

/// Runs f(i) for i in [0, n) on up to `jobs` threads. Work is claimed
/// dynamically; callers store results by index so the outcome never depends
/// on scheduling. The first exception is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(std::min<std::size_t>(n, 1 << 16))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Default degree of parallelism.
inline int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace insardet
