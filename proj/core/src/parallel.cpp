#include "qld/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qld {

namespace {
std::atomic<int> g_max_threads{0};  // 0 = auto

int auto_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp(static_cast<int>(hw == 0 ? 1 : hw), 1, 16);
}
}  // namespace

int max_threads() {
  const int v = g_max_threads.load();
  return v > 0 ? v : auto_threads();
}

void set_max_threads(int n) { g_max_threads.store(n); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  int threads_override) {
  const int cap = threads_override > 0 ? threads_override : max_threads();
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cap), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace qld
