#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vinefx {

inline std::size_t
default_threads()
{
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) over contiguous blocks. `fn` must only write
/// to per-index state; results are then independent of the thread count.
/// The first exception thrown by any worker is rethrown on the caller.
template<typename Fn>
void
parallel_for(std::size_t n, Fn&& fn, std::size_t threads = 0)
{
  if (threads == 0)
    threads = default_threads();
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t block = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * block;
    const std::size_t hi = std::min(n, lo + block);
    if (lo >= hi)
      break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::current_exception();
      }
    });
  }
  for (auto& th : pool)
    th.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace vinefx
