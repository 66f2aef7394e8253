// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qkf {

/// Worker count used by parallel_for when a caller passes 0.
std::size_t default_jobs();
void set_default_jobs(std::size_t jobs);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads with dynamic
/// scheduling. Callers must make fn(i) independent of execution order.
/// The first exception thrown by any fn is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t jobs = 0) {
  if (jobs == 0) jobs = default_jobs();
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(jobs - 1);
    for (std::size_t t = 0; t + 1 < jobs; ++t) pool.emplace_back(worker);
    worker();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace qkf
