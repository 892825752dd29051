#pragma once

#include <thread>
#include <vector>

namespace tdoa {

/// Runs fn(i) for i in [0, count). Work item i always lands in the same
/// worker (strided assignment) and results must be written to per-index
/// slots, so output is independent of the thread count.
template <typename Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, workers, count] {
      for (long i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Default worker count: the --threads flag, else TDOA_PLACER_THREADS, else
/// the hardware concurrency.
int default_thread_count();

}  // namespace tdoa
