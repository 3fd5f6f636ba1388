#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace randopt {

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Callers write
/// results by index, so the outcome never depends on scheduling. The first
/// exception thrown by any task is rethrown after all threads join.
template <class F>
void parallel_for(std::size_t count, unsigned jobs, F&& fn) {
  jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Default parallelism: hardware concurrency, at least one.
inline unsigned default_jobs() { return std::max(1U, std::thread::hardware_concurrency()); }

}  // namespace randopt
