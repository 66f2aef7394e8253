// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qkf/error.hpp"
#include "qkf/feature_map.hpp"
#include "qkf/quantum_kernel.hpp"
#include "qkf/simd.hpp"
#include "qkf/statevector.hpp"

using namespace qkf;

namespace {

fmap::FeatureMapSpec map_spec(fmap::Order o, std::size_t depth, double alpha, std::size_t n) {
  fmap::FeatureMapSpec s;
  s.order = o;
  s.depth = depth;
  s.alpha = alpha;
  s.n_features = n;
  return s;
}

}  // namespace

TEST_CASE("zero state and single gates") {
  auto s = sim::QuantumState::zero(2);
  CHECK(s.dim() == 4);
  CHECK(s.norm() == doctest::Approx(1.0));
  s.apply(sim::GateOp::h(0));
  auto p = s.probabilities();
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  s.apply(sim::GateOp::cx(0, 1));
  p = s.probabilities();
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[3] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.0));
}

TEST_CASE("capacity and index errors") {
  CHECK_THROWS_AS(sim::QuantumState::zero(0), Error);
  CHECK_THROWS_AS(sim::QuantumState::zero(sim::kMaxQubits + 1), Error);
  auto s = sim::QuantumState::zero(2);
  CHECK_THROWS_AS(s.apply(sim::GateOp::h(2)), Error);
  CHECK_THROWS_AS(s.apply(sim::GateOp::cx(1, 1)), Error);
}

TEST_CASE("circuit inverse undoes the circuit") {
  std::mt19937_64 g(1);
  auto spec = map_spec(fmap::Order::kZZ, 2, 1.3, 4);
  auto x = oracle::uniform_vec(g, 4, -1, 1);
  auto s = fmap::encode(spec, x);
  s.run(sim::inverse(fmap::build_circuit(spec, x)));
  CHECK(s.probabilities()[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gate-level encoding matches the dense unitary") {
  std::mt19937_64 g(2);
  for (std::size_t n = 1; n <= 3; ++n)
    for (auto o : {fmap::Order::kZ, fmap::Order::kZZ})
      for (std::size_t depth : {1, 2}) {
        auto spec = map_spec(o, depth, 0.7, n);
        auto x = oracle::uniform_vec(g, n, -1, 1);
        auto s = fmap::encode(spec, x);
        auto u = oracle::feature_map_unitary(x, 0.7, depth, o == fmap::Order::kZZ);
        for (std::size_t k = 0; k < s.dim(); ++k)
          CHECK(std::abs(s.amplitudes()[k] - u(static_cast<Eigen::Index>(k), 0)) < 1e-12);
      }
}

TEST_CASE("EncodedPoint matches gate-level encode on every backend") {
  std::mt19937_64 g(5);
  const auto saved = simd::active();
  for (auto be : {simd::Backend::kScalar, simd::Backend::kAvx2, simd::Backend::kNeon}) {
    if (!simd::available(be)) continue;
    simd::set_backend(be);
    for (std::size_t n = 1; n <= 6; ++n) {
      auto spec = map_spec(fmap::Order::kZZ, 2, 2.0, n);
      auto x = oracle::uniform_vec(g, n, -1, 1);
      fmap::EncodedPoint e(spec, x);
      auto s = fmap::encode(spec, x);
      for (std::size_t k = 0; k < s.dim(); ++k) CHECK(std::abs(s.amplitudes()[k] - e.state().amplitudes()[k]) < 1e-12);
      auto t = e.state();
      e.apply_inverse(t);
      CHECK(t.probabilities()[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  simd::set_backend(saved);
}

TEST_CASE("phase diagonal follows the pair structure") {
  auto spec = map_spec(fmap::Order::kZZ, 1, 0.5, 2);
  std::vector<double> x{0.3, -0.4};
  auto d = fmap::phase_diagonal(spec, x);
  const double phi = (std::numbers::pi - 0.3) * (std::numbers::pi + 0.4);
  CHECK(std::abs(d[0] - 1.0) < 1e-14);
  CHECK(std::abs(d[1] - std::polar(1.0, 2 * 0.5 * (0.3 + phi))) < 1e-12);
  CHECK(std::abs(d[2] - std::polar(1.0, 2 * 0.5 * (-0.4 + phi))) < 1e-12);
  CHECK(std::abs(d[3] - std::polar(1.0, 2 * 0.5 * (0.3 - 0.4))) < 1e-12);
}

TEST_CASE("entangled pairs") {
  auto full = map_spec(fmap::Order::kZZ, 1, 1, 4);
  CHECK(fmap::entangled_pairs(full).size() == 6);
  auto lin = full;
  lin.entanglement = fmap::Entanglement::kLinear;
  auto p = fmap::entangled_pairs(lin);
  REQUIRE(p.size() == 3);
  CHECK(p[2] == std::pair<std::size_t, std::size_t>{2, 3});
  auto z = full;
  z.order = fmap::Order::kZ;
  CHECK(fmap::entangled_pairs(z).empty());
}

TEST_CASE("feature map json round trip and validation") {
  auto s = map_spec(fmap::Order::kZ, 3, 0.25, 5);
  nlohmann::json j = s;
  CHECK(j.get<fmap::FeatureMapSpec>() == s);
  CHECK(fmap::label(s) == "Z-d3");
  nlohmann::json bad = {{"order_of_expansion", "XY"}};
  CHECK_THROWS_AS(bad.get<fmap::FeatureMapSpec>(), Error);
  nlohmann::json extra = {{"order_of_expansion", "Z"}, {"reps", 2}};
  CHECK_THROWS_AS(extra.get<fmap::FeatureMapSpec>(), Error);
}

TEST_CASE("exact kernel equals closed form for Z depth 1 and dense oracle for ZZ") {
  std::mt19937_64 g(9);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 6);
    auto x = oracle::uniform_vec(g, n, -1, 1), y = oracle::uniform_vec(g, n, -1, 1);
    auto z = map_spec(fmap::Order::kZ, 1, 2.0, n);
    CHECK(qkernel::kernel_exact(z, x, y) == doctest::Approx(fmap::z_kernel_closed_form(2.0, x, y)).epsilon(1e-10));
    if (n <= 3) {
      auto zz = map_spec(fmap::Order::kZZ, 2, 2.0, n);
      CHECK(std::abs(qkernel::kernel_exact(zz, x, y) - oracle::fidelity(x, y, 2.0, 2, true)) < 1e-10);
    }
  }
}

TEST_CASE("exact Gram is symmetric PSD with unit diagonal") {
  std::mt19937_64 g(4);
  Matrix rows(12, 3);
  for (auto& v : rows.data()) v = std::uniform_real_distribution<double>(-1, 1)(g);
  auto spec = map_spec(fmap::Order::kZZ, 2, 1.0, 3);
  auto k = qkernel::gram(spec, rows, qkernel::KernelEvalMode::exact(), 2);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(k(i, i) == 1.0);
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(k(i, j) == k(j, i));
      CHECK(k(i, j) >= -1e-15);
      CHECK(k(i, j) <= 1.0 + 1e-12);
    }
  }
  CHECK(qkernel::min_eigenvalue(k) > -1e-10);
  auto cross = qkernel::gram_cross(spec, rows, rows.select_rows(std::vector<std::size_t>{3, 7}),
                                   qkernel::KernelEvalMode::exact(), 1);
  CHECK(cross(0, 7) == doctest::Approx(k(3, 7)).epsilon(1e-12));
  CHECK(cross(1, 7) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampled Gram does not depend on job count") {
  std::mt19937_64 g(6);
  Matrix rows(8, 2);
  for (auto& v : rows.data()) v = std::uniform_real_distribution<double>(-1, 1)(g);
  auto spec = map_spec(fmap::Order::kZZ, 2, 1.0, 2);
  auto mode = qkernel::KernelEvalMode::shots(256, 17);
  CHECK(qkernel::gram(spec, rows, mode, 1) == qkernel::gram(spec, rows, mode, 4));
  auto noisy = qkernel::KernelEvalMode::noisy_shots(256, 17, qkernel::ReadoutNoiseModel::uniform(1, 0.05, 0.05), true);
  CHECK(qkernel::gram_cross(spec, rows, rows, noisy, 1) == qkernel::gram_cross(spec, rows, rows, noisy, 3));
}

TEST_CASE("shot estimates stay near the exact kernel") {
  auto spec = map_spec(fmap::Order::kZZ, 2, 0.5, 3);
  std::vector<double> x{0.1, -0.2, 0.3}, y{0.4, 0.1, -0.5};
  const double k = qkernel::kernel_exact(spec, x, y);
  const double se = std::sqrt(k * (1 - k) / 8192);
  CHECK(std::abs(qkernel::kernel_shots(spec, x, y, 8192, 1) - k) < 5 * se + 1e-12);
  CHECK(qkernel::kernel_shots(spec, x, x, 100, 2) == 1.0);
}

TEST_CASE("sample_counts conserves shots and avoids empty outcomes") {
  std::vector<double> p{0.5, 0.0, 0.25, 0.25};
  auto c = sim::sample_counts(p, 2, 1000, 3);
  CHECK(c.shots() == 1000);
  CHECK(c.counts[1] == 0);
  CHECK(c == sim::sample_counts(p, 2, 1000, 3));
  CHECK(c.bitstring(2) == "10");
  CHECK_THROWS_AS(sim::sample_counts(p, 2, 0, 3), Error);
}

TEST_CASE("confusion matrix: columns sum to one and inverse is exact") {
  auto noise = qkernel::ReadoutNoiseModel{{0.02, 0.05, 0.1}, {0.04, 0.01, 0.08}};
  auto a = qkernel::confusion_matrix(noise);
  Eigen::MatrixXd A(8, 8);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
  }
  for (Eigen::Index c = 0; c < 8; ++c) CHECK(A.col(c).sum() == doctest::Approx(1.0));
  std::mt19937_64 g(8);
  auto p = oracle::uniform_vec(g, 8, 0, 1);
  double s = 0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  Eigen::VectorXd pv = Eigen::Map<Eigen::VectorXd>(p.data(), 8);
  Eigen::VectorXd q = A * pv;
  auto q2 = qkernel::apply_confusion(p, noise);
  for (int i = 0; i < 8; ++i) CHECK(q2[static_cast<std::size_t>(i)] == doctest::Approx(q(i)).epsilon(1e-13));
  Eigen::VectorXd back = A.inverse() * q;
  auto back2 = qkernel::apply_confusion_inverse(q2, noise);
  for (int i = 0; i < 8; ++i) {
    CHECK(back2[static_cast<std::size_t>(i)] == doctest::Approx(back(i)).epsilon(1e-12));
    CHECK(back2[static_cast<std::size_t>(i)] == doctest::Approx(p[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("readout noise is a no-op at zero and conserves shots") {
  sim::Counts c{2, {100, 0, 50, 10}};
  CHECK(qkernel::apply_readout_noise(c, qkernel::ReadoutNoiseModel::uniform(2, 0, 0), 1) == c);
  auto n = qkernel::apply_readout_noise(c, qkernel::ReadoutNoiseModel::uniform(2, 0.1, 0.2), 1);
  CHECK(n.shots() == 160);
  CHECK(n.counts[1] > 0);
}

TEST_CASE("noise model validation") {
  CHECK_THROWS_AS(qkernel::ReadoutNoiseModel::uniform(2, 0.5, 0.1), Error);
  CHECK_THROWS_AS(qkernel::ReadoutNoiseModel::uniform(2, -0.1, 0.1), Error);
  auto m = qkernel::ReadoutNoiseModel::uniform(1, 0.05, 0.02).resized(3);
  CHECK(m.n_qubits() == 3);
  CHECK(m.p10[2] == 0.02);
  CHECK_THROWS_AS((qkernel::ReadoutNoiseModel{{0.1, 0.1}, {0.1, 0.1}}.resized(3)), Error);
}

TEST_CASE("clip_quasi_probabilities") {
  auto q = qkernel::clip_quasi_probabilities({0.6, -0.1, 0.5, 0.0});
  CHECK(q[0] == doctest::Approx(0.6 / 1.1));
  CHECK(q[1] == 0.0);
}

TEST_CASE("clip_psd removes negative eigenvalues") {
  Matrix k = Matrix::from_rows({{1.0, 0.9, -0.9}, {0.9, 1.0, 0.9}, {-0.9, 0.9, 1.0}});
  CHECK(qkernel::min_eigenvalue(k) < 0);
  qkernel::clip_psd(k);
  CHECK(qkernel::min_eigenvalue(k) > -1e-12);
  CHECK(k(0, 1) == doctest::Approx(k(1, 0)));
}

TEST_CASE("eval mode json") {
  auto m = qkernel::KernelEvalMode::noisy_shots(1024, 3, qkernel::ReadoutNoiseModel::uniform(1, 0.05, 0.05), true);
  nlohmann::json j = m;
  auto back = j.get<qkernel::KernelEvalMode>();
  CHECK(back.kind == qkernel::EvalKind::kNoisyShots);
  CHECK(back.n_shots == 1024);
  CHECK(back.mitigate);
  CHECK(back.label() == "noisy-mitigated");
  CHECK_THROWS_AS((nlohmann::json{{"mode", "shots"}, {"shotz", 3}}.get<qkernel::KernelEvalMode>()), Error);
  CHECK_THROWS_AS((nlohmann::json{{"mode", "fast"}}.get<qkernel::KernelEvalMode>()), Error);
}

TEST_CASE("kernel cache round trip and key mismatch") {
  Matrix k = Matrix::from_rows({{1, 0.5}, {0.5, 1}});
  auto path = std::filesystem::temp_directory_path() / "qkf_test_cache.bin";
  qkernel::save_kernel_cache(path, 77, k);
  auto got = qkernel::load_kernel_cache(path, 77);
  REQUIRE(got.has_value());
  CHECK(*got == k);
  CHECK_FALSE(qkernel::load_kernel_cache(path, 78).has_value());
  std::filesystem::remove(path);
  CHECK_FALSE(qkernel::load_kernel_cache(path, 77).has_value());
}
