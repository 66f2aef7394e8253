// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <vector>

#include "doctest.h"
#include "qkf/simd.hpp"

using namespace qkf;
using qkf::simd::Backend;

namespace {

std::vector<simd::cplx> random_cvec(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<simd::cplx> v(n);
  for (auto& x : v) x = {d(g), d(g)};
  return v;
}

std::vector<double> random_vec(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

void check_close(const std::vector<simd::cplx>& a, const std::vector<simd::cplx>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= tol);
  }
}

// Every compiled-in, CPU-supported vector backend against the scalar table.
std::vector<Backend> vector_backends() {
  std::vector<Backend> out;
  for (auto b : {Backend::kAvx2, Backend::kNeon})
    if (simd::available(b)) out.push_back(b);
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(simd::available(Backend::kScalar));
  CHECK(simd::backend_name(Backend::kScalar) == "scalar");
}

TEST_CASE("vector kernels agree with scalar reference") {
  const auto& ref = simd::kernels(Backend::kScalar);
  std::mt19937_64 g(42);
  for (auto be : vector_backends()) {
    CAPTURE(simd::backend_name(be));
    const auto& k = simd::kernels(be);
    for (std::size_t n = 0; n <= 37; ++n) {
      CAPTURE(n);
      auto a = random_cvec(g, n), b = random_cvec(g, n);
      const auto c0 = ref.cdot(a.data(), b.data(), n), c1 = k.cdot(a.data(), b.data(), n);
      CHECK(std::abs(c0 - c1) <= 1e-12 * (1.0 + std::abs(c0)) * static_cast<double>(n + 1));
      CHECK(ref.norm2(a.data(), n) == doctest::Approx(k.norm2(a.data(), n)).epsilon(1e-13));

      auto m0 = a, m1 = a;
      ref.cmul(m0.data(), b.data(), n);
      k.cmul(m1.data(), b.data(), n);
      check_close(m0, m1, 1e-13);
      m0 = a, m1 = a;
      ref.cmul_conj(m0.data(), b.data(), n);
      k.cmul_conj(m1.data(), b.data(), n);
      check_close(m0, m1, 1e-13);

      auto x = random_vec(g, n), y = random_vec(g, n);
      CHECK(ref.dot(x.data(), y.data(), n) == doctest::Approx(k.dot(x.data(), y.data(), n)).epsilon(1e-12));
      CHECK(ref.sqdist(x.data(), y.data(), n) == doctest::Approx(k.sqdist(x.data(), y.data(), n)).epsilon(1e-12));
    }
    for (std::size_t nq = 1; nq <= 8; ++nq)
      for (std::size_t q = 0; q < nq; ++q) {
        CAPTURE(nq);
        CAPTURE(q);
        auto a = random_cvec(g, std::size_t{1} << nq);
        auto b = a;
        ref.hadamard(a.data(), nq, q);
        k.hadamard(b.data(), nq, q);
        check_close(a, b, 1e-13);
      }
  }
}

TEST_CASE("hadamard is an involution on every qubit") {
  std::mt19937_64 g(3);
  for (auto be : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (!simd::available(be)) continue;
    const auto& k = simd::kernels(be);
    for (std::size_t q = 0; q < 5; ++q) {
      auto a = random_cvec(g, 32);
      auto b = a;
      k.hadamard(b.data(), 5, q);
      k.hadamard(b.data(), 5, q);
      check_close(a, b, 1e-13);
    }
  }
}

TEST_CASE("hadamard on |0> gives the + state") {
  for (auto be : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
    if (!simd::available(be)) continue;
    std::vector<simd::cplx> a{1.0, 0.0};
    simd::kernels(be).hadamard(a.data(), 1, 0);
    CHECK(a[0].real() == doctest::Approx(std::sqrt(0.5)));
    CHECK(a[1].real() == doctest::Approx(std::sqrt(0.5)));
  }
}

TEST_CASE("set_backend switches the active table") {
  const auto before = simd::active();
  simd::set_backend(Backend::kScalar);
  CHECK(simd::active() == Backend::kScalar);
  simd::set_backend(before);
  CHECK(simd::active() == before);
}
