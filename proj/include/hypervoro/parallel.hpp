#pragma once

// Static chunked work splitting. Callers keep determinism by writing into
// per-index slots (or per-trial integer accumulators) and reducing in index
// order after the join; the chunk boundaries never influence the result.

#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hypervoro {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HYPERVORO_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

// Runs fn(begin, end) over a static partition of [0, total) into `workers`
// contiguous ranges. Exceptions from workers are rethrown on the caller.
template <typename Fn>
void parallel_chunks(std::size_t total, int workers, Fn&& fn) {
  if (workers < 1) throw std::invalid_argument("parallel_chunks: workers < 1");
  if (total == 0) return;
  std::size_t w = std::min<std::size_t>(std::size_t(workers), total);
  if (w == 1) {
    fn(std::size_t{0}, total);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t t = 0; t < w; ++t) {
    std::size_t begin = total * t / w;
    std::size_t end = total * (t + 1) / w;
    threads.emplace_back([&, t, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hypervoro
