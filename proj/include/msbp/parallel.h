#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace msbp {

// Runs body(i) for i in [0, count) on up to `workers` threads.  Work items are claimed
// dynamically; callers make results independent of which thread ran an item.  The first
// exception thrown by any item is rethrown after all threads join.
template <typename Body>
auto parallel_for(std::size_t count, int workers, Body&& body) -> void {
  auto threads = static_cast<std::size_t>(std::max(1, workers));
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (auto i = std::size_t{0}; i != count; ++i) { body(i); }
    return;
  }

  auto next = std::atomic<std::size_t>{0};
  auto error = std::exception_ptr{};
  auto error_mutex = std::mutex{};
  auto run = [&] {
    for (auto i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        auto lock = std::lock_guard{error_mutex};
        if (!error) { error = std::current_exception(); }
      }
    }
  };

  auto pool = std::vector<std::jthread>{};
  for (auto t = std::size_t{1}; t != threads; ++t) { pool.emplace_back(run); }
  run();
  pool.clear();
  if (error) { std::rethrow_exception(error); }
}

}  // namespace msbp
