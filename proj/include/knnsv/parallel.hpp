#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace knnsv {

// Thread count resolution: explicit request > KNNSV_THREADS > hardware.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("KNNSV_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Static block partition of [begin, end) across `threads` workers. Exceptions
// from workers are rethrown on the calling thread.
inline void parallel_for(int begin, int end, int threads,
                         const std::function<void(int)>& fn) {
  const int count = end - begin;
  if (count <= 0) return;
  threads = std::min(resolve_threads(threads), count);
  if (threads <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(count) * w / threads);
    const int hi = begin + static_cast<int>(static_cast<long long>(count) * (w + 1) / threads);
    pool.emplace_back([&, lo, hi, w] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace knnsv
