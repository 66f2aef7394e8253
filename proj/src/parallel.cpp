// SPDX-License-Identifier: Apache-2.0
#include "qkf/parallel.hpp"

namespace qkf {

namespace {
std::atomic<std::size_t> g_jobs{0};
}

std::size_t default_jobs() {
  std::size_t j = g_jobs.load();
  if (j == 0) j = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return j;
}

void set_default_jobs(std::size_t jobs) { g_jobs.store(jobs); }

}  // namespace qkf
