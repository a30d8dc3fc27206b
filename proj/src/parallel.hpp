#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace htsf::detail {

// Runs f(0..n-1) on up to `workers` threads. Callers write results by index,
// so output never depends on scheduling. The exception from the lowest failing
// index is rethrown.
template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F&& f) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;
  auto body = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    const std::size_t count = workers < n ? workers : n;
    threads.reserve(count - 1);
    for (std::size_t t = 1; t < count; ++t) threads.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace htsf::detail
