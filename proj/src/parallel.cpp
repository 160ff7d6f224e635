#include "hbvm/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hbvm {

namespace {
std::atomic<int> g_max_threads{0};
thread_local bool t_in_worker = false;
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw ? static_cast<int>(hw) : 1;
  }
  return n;
}

void parallel_for(long n, const std::function<void(long)>& fn) {
  const int threads = max_threads();
  // nested calls run serially inside their worker
  if (threads <= 1 || n < 2 || t_in_worker) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    t_in_worker = true;
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int k = static_cast<int>(std::min<long>(threads, n));
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace hbvm
