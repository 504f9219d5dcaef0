#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace reclab {

// Block-partitioned parallel loop. fn(i) must only write state owned by
// index i; callers that reduce should collect per-index partials and sum
// them sequentially afterwards so results do not depend on scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         unsigned num_threads = 0) {
  if (n == 0) return;
  unsigned hw = num_threads ? num_threads : std::thread::hardware_concurrency();
  if (hw < 2 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  if (hw > n) hw = static_cast<unsigned>(n);

  std::vector<std::thread> workers;
  workers.reserve(hw);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < hw; ++t) {
    const std::size_t begin = n * t / hw;
    const std::size_t end = n * (t + 1) / hw;
    workers.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace reclab
