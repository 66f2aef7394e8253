// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "qkf/error.hpp"
#include "qkf/simd.hpp"

namespace qkf::simd {

namespace {

Backend best_available() {
  if (const char* env = std::getenv("QKF_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::kScalar;
  }
  if (available(Backend::kAvx2)) return Backend::kAvx2;
  if (available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

std::atomic<const Kernels*> g_current{nullptr};
std::atomic<Backend> g_backend{Backend::kScalar};

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

bool available(Backend b) {
  switch (b) {
    case Backend::kScalar: return true;
    case Backend::kAvx2:
#if defined(QKF_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(QKF_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels(Backend b) {
  require(available(b), ErrorKind::kInvalidArgument,
          "SIMD backend not available: " + std::string(backend_name(b)));
  switch (b) {
#if defined(QKF_HAVE_AVX2)
    case Backend::kAvx2: return detail::kAvx2Kernels;
#endif
#if defined(QKF_HAVE_NEON)
    case Backend::kNeon: return detail::kNeonKernels;
#endif
    default: return detail::kScalarKernels;
  }
}

void set_backend(Backend b) {
  g_current.store(&kernels(b));
  g_backend.store(b);
}

Backend active() {
  detail::current();
  return g_backend.load();
}

namespace detail {

const Kernels& current() {
  const Kernels* k = g_current.load(std::memory_order_acquire);
  if (k == nullptr) {
    const Backend b = best_available();
    g_backend.store(b);
    k = &kernels(b);
    g_current.store(k, std::memory_order_release);
  }
  return *k;
}

}  // namespace detail

}  // namespace qkf::simd
