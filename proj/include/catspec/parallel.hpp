#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace catspec {

// worker count; CATSPEC_THREADS overrides hardware concurrency
inline int thread_count() {
  if (const char* env = std::getenv("CATSPEC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// runs fn(i) for i in [0, n).  fn must write only to its own slot i, so the
// result is identical for any worker count and schedule.  the first exception
// thrown by a worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn, int threads = 0) {
  if (n <= 0) return;
  if (threads <= 0) threads = thread_count();
  if (threads > n) threads = static_cast<int>(n);
  if (threads <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::ptrdiff_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::ptrdiff_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        cursor.store(n);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace catspec
