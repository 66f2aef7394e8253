// SPDX-License-Identifier: Apache-2.0
// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached after the
// dispatcher has checked the CPU flags.
#include <immintrin.h>

#include <numbers>

#include "qkf/simd.hpp"

namespace qkf::simd::detail {

namespace {

// One __m256d holds two complex numbers: [re0, im0, re1, im1].

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

cplx cdot_avx2(const cplx* a, const cplx* b, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d acc_re = _mm256_setzero_pd();  // ar*br, ai*bi
  __m256d acc_im = _mm256_setzero_pd();  // ar*bi, ai*br
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    acc_re = _mm256_fmadd_pd(va, vb, acc_re);
    acc_im = _mm256_fmadd_pd(va, _mm256_permute_pd(vb, 0x5), acc_im);
  }
  double re = hsum(acc_re);
  alignas(32) double t[4];
  _mm256_store_pd(t, acc_im);
  double im = (t[0] - t[1]) + (t[2] - t[3]);
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double norm2_avx2(const cplx* a, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const std::size_t m = 2 * n;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d v = _mm256_loadu_pd(pa + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < m; ++i) s += pa[i] * pa[i];
  return s;
}

template <bool Conj>
void cmul_impl(cplx* a, const cplx* d, std::size_t n) {
  double* pa = reinterpret_cast<double*>(a);
  const double* pd = reinterpret_cast<const double*>(d);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d va = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vd = _mm256_loadu_pd(pd + 2 * i);
    const __m256d dr = _mm256_movedup_pd(vd);
    const __m256d di = _mm256_permute_pd(vd, 0xF);
    const __m256d cross = _mm256_mul_pd(_mm256_permute_pd(va, 0x5), di);
    __m256d r;
    if constexpr (Conj) {
      r = _mm256_fmsubadd_pd(va, dr, cross);
    } else {
      r = _mm256_fmaddsub_pd(va, dr, cross);
    }
    _mm256_storeu_pd(pa + 2 * i, r);
  }
  for (; i < n; ++i) a[i] *= Conj ? std::conj(d[i]) : d[i];
}

void cmul_avx2(cplx* a, const cplx* d, std::size_t n) { cmul_impl<false>(a, d, n); }
void cmul_conj_avx2(cplx* a, const cplx* d, std::size_t n) { cmul_impl<true>(a, d, n); }

void hadamard_avx2(cplx* a, std::size_t n_qubits, std::size_t q) {
  const __m256d r = _mm256_set1_pd(std::numbers::sqrt2 / 2.0);
  const std::size_t dim = std::size_t{1} << n_qubits;
  double* p = reinterpret_cast<double*>(a);
  if (dim < 2) return;
  if (q == 0) {
    // Partners are adjacent: one register holds [x, y].
    for (std::size_t k = 0; k < dim; k += 2) {
      const __m256d v = _mm256_loadu_pd(p + 2 * k);
      const __m256d sw = _mm256_permute2f128_pd(v, v, 0x01);
      const __m256d sum = _mm256_add_pd(v, sw);
      const __m256d diff = _mm256_sub_pd(sw, v);  // lanes 2,3: x - y
      _mm256_storeu_pd(p + 2 * k, _mm256_mul_pd(_mm256_blend_pd(sum, diff, 0xC), r));
    }
    return;
  }
  const std::size_t stride = std::size_t{1} << q;
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t k = base; k < base + stride; k += 2) {
      const __m256d x = _mm256_loadu_pd(p + 2 * k);
      const __m256d y = _mm256_loadu_pd(p + 2 * (k + stride));
      _mm256_storeu_pd(p + 2 * k, _mm256_mul_pd(_mm256_add_pd(x, y), r));
      _mm256_storeu_pd(p + 2 * (k + stride), _mm256_mul_pd(_mm256_sub_pd(x, y), r));
    }
  }
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Kernels kAvx2Kernels{
    cdot_avx2, norm2_avx2, cmul_avx2, cmul_conj_avx2, hadamard_avx2, dot_avx2, sqdist_avx2,
};

}  // namespace qkf::simd::detail
