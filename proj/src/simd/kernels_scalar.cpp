// SPDX-License-Identifier: Apache-2.0
#include <numbers>

#include "qkf/simd.hpp"

namespace qkf::simd::detail {

namespace {

cplx cdot_scalar(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double norm2_scalar(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(a[i]);
  return s;
}

void cmul_scalar(cplx* a, const cplx* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= d[i];
}

void cmul_conj_scalar(cplx* a, const cplx* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= std::conj(d[i]);
}

void hadamard_scalar(cplx* a, std::size_t n_qubits, std::size_t q) {
  const double r = std::numbers::sqrt2 / 2.0;
  const std::size_t dim = std::size_t{1} << n_qubits;
  const std::size_t stride = std::size_t{1} << q;
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t k = base; k < base + stride; ++k) {
      const cplx x = a[k];
      const cplx y = a[k + stride];
      a[k] = (x + y) * r;
      a[k + stride] = (x - y) * r;
    }
  }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Kernels kScalarKernels{
    cdot_scalar, norm2_scalar, cmul_scalar, cmul_conj_scalar, hadamard_scalar, dot_scalar, sqdist_scalar,
};

}  // namespace qkf::simd::detail
