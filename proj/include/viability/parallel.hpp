#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace viability {

/// Worker count; 0 means hardware concurrency.
struct ExecPolicy {
  unsigned threads = 0;

  unsigned resolved() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

/// Runs body(i) for i in [0, count) on a static partition of the index range.
/// Callers write results into per-index slots, so output never depends on the
/// worker count. The first exception (lowest chunk) is rethrown.
template <class Body>
void parallel_for(std::size_t count, ExecPolicy policy, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(policy.resolved(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = count * w / workers;
      const std::size_t end = count * (w + 1) / workers;
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace viability
