#include "arq/parallel.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>
#include <vector>

namespace arq {

namespace {
int g_threads = 1;
}

void set_worker_threads(int n) {
  if (n < 1) throw std::invalid_argument("set_worker_threads: thread count must be >= 1");
  g_threads = n;
}

int worker_threads() { return g_threads; }

void parallel_for(int n, const std::function<void(int, int)>& fn) {
  if (n <= 0) return;
  int nthreads = std::min(g_threads, n);
  if (nthreads == 1) {
    fn(0, n);
    return;
  }
  // Callers must keep iterations independent (disjoint writes, no
  // cross-iteration reduction); then any chunking gives identical results.
  int chunk = (n + nthreads - 1) / nthreads;
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    int begin = t * chunk;
    int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace arq
