#include "stopdiff/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "stopdiff/io.hpp"

namespace stopdiff {

void parallel_for_index(std::int64_t n, int workers,
                        const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  workers = io::resolve_workers(workers);
  if (workers > n) workers = static_cast<int>(n);

  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }

  // Chunks large enough to amortize the cursor, small enough to balance.
  const std::int64_t chunk =
      std::max<std::int64_t>(1, std::min<std::int64_t>(1024, n / (8 * workers) + 1));

  std::atomic<std::int64_t> cursor{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> failed{false};

  auto body = [&] {
    for (;;) {
      const std::int64_t begin = cursor.fetch_add(chunk, std::memory_order_relaxed);
      if (begin >= n || failed.load(std::memory_order_relaxed)) return;
      const std::int64_t end = std::min(begin + chunk, n);
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();

  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stopdiff
