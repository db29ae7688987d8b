// parallel.hpp
//
// Minimal static-partition parallel loop. Work is split into contiguous
// chunks and every callback writes only to its own slots, so results never
// depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pcc {

namespace detail {
inline std::atomic<unsigned> &thread_limit() {
  static std::atomic<unsigned> limit{0};
  return limit;
}
} // namespace detail

/// Caps internal parallelism. 0 means hardware concurrency.
inline void set_max_threads(unsigned n) { detail::thread_limit().store(n); }

inline unsigned max_threads() {
  unsigned n = detail::thread_limit().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(i) for every i in [begin, end). `cost_per_item` is a rough
/// operation count used to skip thread startup on small loops.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn &&fn,
                  std::size_t cost_per_item = 1) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  constexpr std::size_t kMinWorkPerThread = 1 << 15;
  std::size_t threads = std::min<std::size_t>(max_threads(), count);
  threads = std::min(threads,
                     std::max<std::size_t>(1, count * cost_per_item / kMinWorkPerThread));
  if (threads <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  workers.reserve(threads - 1);
  const std::size_t chunk = (count + threads - 1) / threads;
  auto run = [&](std::size_t t) {
    const std::size_t lo = begin + t * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    try {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  for (std::size_t t = 1; t < threads; ++t) workers.emplace_back(run, t);
  run(0);
  for (auto &w : workers) w.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

} // namespace pcc
