// SPDX-License-Identifier: Apache-2.0
// NEON (AArch64) variants. Advanced SIMD is mandatory on AArch64, so no
// runtime probe is needed beyond the compile-time architecture check.
#include <arm_neon.h>

#include <numbers>

#include "qkf/simd.hpp"

namespace qkf::simd::detail {

namespace {

// One float64x2_t holds one complex number: [re, im].

cplx cdot_neon(const cplx* a, const cplx* b, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  float64x2_t acc_re = vdupq_n_f64(0.0);  // ar*br, ai*bi
  float64x2_t acc_im = vdupq_n_f64(0.0);  // ar*bi, ai*br
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t va = vld1q_f64(pa + 2 * i);
    const float64x2_t vb = vld1q_f64(pb + 2 * i);
    acc_re = vfmaq_f64(acc_re, va, vb);
    acc_im = vfmaq_f64(acc_im, va, vextq_f64(vb, vb, 1));
  }
  return {vaddvq_f64(acc_re), vgetq_lane_f64(acc_im, 0) - vgetq_lane_f64(acc_im, 1)};
}

double norm2_neon(const cplx* a, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t v = vld1q_f64(pa + 2 * i);
    acc = vfmaq_f64(acc, v, v);
  }
  return vaddvq_f64(acc);
}

template <bool Conj>
void cmul_impl(cplx* a, const cplx* d, std::size_t n) {
  double* pa = reinterpret_cast<double*>(a);
  const double* pd = reinterpret_cast<const double*>(d);
  const float64x2_t sign = Conj ? float64x2_t{1.0, -1.0} : float64x2_t{-1.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    const float64x2_t va = vld1q_f64(pa + 2 * i);
    const float64x2_t vd = vld1q_f64(pd + 2 * i);
    const float64x2_t dr = vdupq_laneq_f64(vd, 0);
    const float64x2_t di = vdupq_laneq_f64(vd, 1);
    const float64x2_t sw = vextq_f64(va, va, 1);  // [ai, ar]
    float64x2_t r = vmulq_f64(va, dr);
    r = vfmaq_f64(r, vmulq_f64(sw, di), sign);
    vst1q_f64(pa + 2 * i, r);
  }
}

void cmul_neon(cplx* a, const cplx* d, std::size_t n) { cmul_impl<false>(a, d, n); }
void cmul_conj_neon(cplx* a, const cplx* d, std::size_t n) { cmul_impl<true>(a, d, n); }

void hadamard_neon(cplx* a, std::size_t n_qubits, std::size_t q) {
  const float64x2_t r = vdupq_n_f64(std::numbers::sqrt2 / 2.0);
  const std::size_t dim = std::size_t{1} << n_qubits;
  const std::size_t stride = std::size_t{1} << q;
  double* p = reinterpret_cast<double*>(a);
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t k = base; k < base + stride; ++k) {
      const float64x2_t x = vld1q_f64(p + 2 * k);
      const float64x2_t y = vld1q_f64(p + 2 * (k + stride));
      vst1q_f64(p + 2 * k, vmulq_f64(vaddq_f64(x, y), r));
      vst1q_f64(p + 2 * (k + stride), vmulq_f64(vsubq_f64(x, y), r));
    }
  }
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sqdist_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Kernels kNeonKernels{
    cdot_neon, norm2_neon, cmul_neon, cmul_conj_neon, hadamard_neon, dot_neon, sqdist_neon,
};

}  // namespace qkf::simd::detail
