#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nonsticky {

/// Calls body(begin, end) on `workers` threads over contiguous slices of
/// [0, n). Bodies must write only to their own slots; the partition never
/// affects results. The first exception thrown by any slice is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  if (n == 0) return;
  workers = std::max(1u, workers);
  if (workers == 1 || n < 2) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = n * c / chunks;
      const std::size_t end = n * (c + 1) / chunks;
      pool.emplace_back([&, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace nonsticky
