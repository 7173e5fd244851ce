#include "splat/core.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace splat {

namespace {

int initial_thread_count() {
  if (const char* env = std::getenv("SPLAT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}

std::atomic<int> g_threads{initial_thread_count()};

}  // namespace

int thread_count() {
  int n = g_threads.load();
  if (n <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}

void set_thread_count(int n) { g_threads.store(n); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
  if (n <= 0) return;
  int workers = thread_count();
  if (workers <= 1 || n == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<int>(std::min<int64_t>(workers, n));
  std::atomic<int64_t> next{0};
  const int64_t chunk = std::max<int64_t>(1, n / (workers * 8));
  auto body = [&] {
    for (;;) {
      int64_t begin = next.fetch_add(chunk);
      if (begin >= n) return;
      int64_t end = std::min(begin + chunk, n);
      for (int64_t i = begin; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
}

}  // namespace splat
