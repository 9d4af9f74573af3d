#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fracbin {

/// Number of workers to use when the caller passes 0.
inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Calls body(index) for every index in [begin, end) using `workers` threads.
/// Indices are handed out in fixed-size chunks from an atomic counter; callers
/// must write results only into slots owned by the index so the output does not
/// depend on scheduling. The first exception thrown by any body is rethrown.
template <class Body>
void parallel_for(std::int64_t begin, std::int64_t end, unsigned workers, const Body& body,
                  std::int64_t chunk = 1) {
  if (end <= begin) return;
  if (workers == 0) workers = default_workers();
  chunk = std::max<std::int64_t>(1, chunk);
  const std::int64_t count = end - begin;
  const auto thread_count =
      static_cast<unsigned>(std::min<std::int64_t>(workers, (count + chunk - 1) / chunk));
  if (thread_count <= 1) {
    for (std::int64_t index = begin; index < end; ++index) body(index);
    return;
  }
  std::atomic<std::int64_t> next{begin};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (;;) {
        const std::int64_t first = next.fetch_add(chunk);
        if (first >= end) break;
        const std::int64_t last = std::min(end, first + chunk);
        for (std::int64_t index = first; index < last; ++index) body(index);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(end);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(thread_count - 1);
  for (unsigned t = 1; t < thread_count; ++t) pool.emplace_back(run);
  run();
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fracbin
