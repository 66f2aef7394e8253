// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel inner loops of the simulator and the classical kernels.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on AArch64) are selected at runtime from the
// CPU feature set; the environment variable QKF_SIMD=scalar forces the
// reference path. Vector reductions accumulate in a different order than
// the scalar loops, so results agree to rounding, not bit-for-bit.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace qkf::simd {

using cplx = std::complex<double>;

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view backend_name(Backend b);

/// True when the backend is compiled in and supported by this CPU.
bool available(Backend b);

/// Backend currently used by the free functions below.
Backend active();

/// Switches backend; throws qkf::Error if unavailable. Intended for tests
/// and benchmarking; not safe to call while other threads run kernels.
void set_backend(Backend b);

/// Function table of one backend.
struct Kernels {
  /// Σ conj(a[i])·b[i]
  cplx (*cdot)(const cplx* a, const cplx* b, std::size_t n);
  /// Σ |a[i]|²
  double (*norm2)(const cplx* a, std::size_t n);
  /// a[i] *= d[i]
  void (*cmul)(cplx* a, const cplx* d, std::size_t n);
  /// a[i] *= conj(d[i])
  void (*cmul_conj)(cplx* a, const cplx* d, std::size_t n);
  /// Hadamard on qubit q of a 2^n_qubits state (qubit 0 = least significant bit).
  void (*hadamard)(cplx* a, std::size_t n_qubits, std::size_t q);
  /// Σ a[i]·b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// Σ (a[i]-b[i])²
  double (*sqdist)(const double* a, const double* b, std::size_t n);
};

/// Kernel table for a specific backend (must be available).
const Kernels& kernels(Backend b);

namespace detail {
extern const Kernels kScalarKernels;
#if defined(QKF_HAVE_AVX2)
extern const Kernels kAvx2Kernels;
#endif
#if defined(QKF_HAVE_NEON)
extern const Kernels kNeonKernels;
#endif
const Kernels& current();
}  // namespace detail

inline cplx cdot(std::span<const cplx> a, std::span<const cplx> b) {
  return detail::current().cdot(a.data(), b.data(), a.size());
}
inline double norm2(std::span<const cplx> a) { return detail::current().norm2(a.data(), a.size()); }
inline void cmul(std::span<cplx> a, std::span<const cplx> d) {
  detail::current().cmul(a.data(), d.data(), a.size());
}
inline void cmul_conj(std::span<cplx> a, std::span<const cplx> d) {
  detail::current().cmul_conj(a.data(), d.data(), a.size());
}
inline void hadamard(std::span<cplx> a, std::size_t n_qubits, std::size_t q) {
  detail::current().hadamard(a.data(), n_qubits, q);
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  return detail::current().dot(a.data(), b.data(), a.size());
}
inline double sqdist(std::span<const double> a, std::span<const double> b) {
  return detail::current().sqdist(a.data(), b.data(), a.size());
}

}  // namespace qkf::simd
