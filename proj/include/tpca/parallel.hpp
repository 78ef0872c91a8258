#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tpca {

inline std::size_t default_thread_count() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n). Each index must write only its own output
/// slot, so results do not depend on scheduling. If several indices throw,
/// the exception from the lowest index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t max_threads = default_thread_count()) {
  const std::size_t threads = std::min(n, max_threads);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
  }
  if (failed)
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
}

}  // namespace tpca
