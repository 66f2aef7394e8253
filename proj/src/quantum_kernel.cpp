// SPDX-License-Identifier: Apache-2.0
#include "qkf/quantum_kernel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "qkf/error.hpp"
#include "qkf/parallel.hpp"
#include "qkf/rng.hpp"
#include "qkf/simd.hpp"

namespace qkf::qkernel {

// ---------------------------------------------------------------- noise model

ReadoutNoiseModel ReadoutNoiseModel::uniform(std::size_t n_qubits, double p01, double p10) {
  ReadoutNoiseModel m{std::vector<double>(n_qubits, p01), std::vector<double>(n_qubits, p10)};
  m.validate();
  return m;
}

bool ReadoutNoiseModel::is_zero() const {
  return std::all_of(p01.begin(), p01.end(), [](double p) { return p == 0.0; }) &&
         std::all_of(p10.begin(), p10.end(), [](double p) { return p == 0.0; });
}

void ReadoutNoiseModel::validate() const {
  require(p01.size() == p10.size(), ErrorKind::kInvalidArgument, "p01 and p10 differ in length");
  for (std::size_t q = 0; q < p01.size(); ++q) {
    require(p01[q] >= 0.0 && p01[q] < 0.5 && p10[q] >= 0.0 && p10[q] < 0.5, ErrorKind::kInvalidArgument,
            "readout error probabilities must lie in [0, 0.5)");
  }
}

ReadoutNoiseModel ReadoutNoiseModel::resized(std::size_t n) const {
  validate();
  require(!p01.empty(), ErrorKind::kInvalidArgument, "empty readout noise model");
  if (p01.size() == 1) return uniform(n, p01[0], p10[0]);
  require(p01.size() >= n, ErrorKind::kDimension,
          "noise model covers " + std::to_string(p01.size()) + " qubits, need " + std::to_string(n));
  ReadoutNoiseModel m{{p01.begin(), p01.begin() + static_cast<std::ptrdiff_t>(n)},
                      {p10.begin(), p10.begin() + static_cast<std::ptrdiff_t>(n)}};
  return m;
}

KernelEvalMode KernelEvalMode::shots(std::uint64_t n_shots, std::uint64_t seed) {
  KernelEvalMode m;
  m.kind = EvalKind::kShots;
  m.n_shots = n_shots;
  m.seed = seed;
  return m;
}

KernelEvalMode KernelEvalMode::noisy_shots(std::uint64_t n_shots, std::uint64_t seed, ReadoutNoiseModel noise,
                                           bool mitigate) {
  KernelEvalMode m;
  m.kind = EvalKind::kNoisyShots;
  m.n_shots = n_shots;
  m.seed = seed;
  m.noise = std::move(noise);
  m.mitigate = mitigate;
  return m;
}

void KernelEvalMode::validate() const {
  if (kind == EvalKind::kExact) return;
  require(n_shots >= 1, ErrorKind::kInvalidArgument, "n_shots must be >= 1");
  if (kind == EvalKind::kNoisyShots) noise.validate();
}

std::string KernelEvalMode::label() const {
  switch (kind) {
    case EvalKind::kExact: return "exact";
    case EvalKind::kShots: return "shots";
    case EvalKind::kNoisyShots: return mitigate ? "noisy-mitigated" : "noisy";
  }
  return "?";
}

void to_json(nlohmann::json& j, const KernelEvalMode& m) {
  j = nlohmann::json{{"mode", m.kind == EvalKind::kExact   ? "exact"
                              : m.kind == EvalKind::kShots ? "shots"
                                                           : "noisy_shots"}};
  if (m.kind != EvalKind::kExact) {
    j["n_shots"] = m.n_shots;
    j["seed"] = m.seed;
    j["psd_clip"] = m.psd_clip;
  }
  if (m.kind == EvalKind::kNoisyShots) {
    j["p01"] = m.noise.p01;
    j["p10"] = m.noise.p10;
    j["mitigate"] = m.mitigate;
  }
}

void from_json(const nlohmann::json& j, KernelEvalMode& m) {
  static const std::set<std::string> kKeys = {"mode", "n_shots", "seed", "psd_clip", "p01", "p10", "mitigate"};
  for (const auto& [key, _] : j.items())
    require(kKeys.count(key) > 0, ErrorKind::kSchema, "unknown eval mode key: " + key);
  const std::string mode = j.value("mode", std::string("exact"));
  m = KernelEvalMode{};
  if (mode == "exact") {
    m.kind = EvalKind::kExact;
  } else if (mode == "shots") {
    m.kind = EvalKind::kShots;
  } else if (mode == "noisy_shots") {
    m.kind = EvalKind::kNoisyShots;
  } else {
    fail(ErrorKind::kSchema, "mode must be exact, shots or noisy_shots");
  }
  m.n_shots = j.value("n_shots", m.n_shots);
  m.seed = j.value("seed", m.seed);
  m.psd_clip = j.value("psd_clip", m.psd_clip);
  m.mitigate = j.value("mitigate", false);
  auto as_vec = [&](const char* key) -> std::vector<double> {
    if (!j.contains(key)) return {0.05};
    if (j.at(key).is_number()) return {j.at(key).get<double>()};
    return j.at(key).get<std::vector<double>>();
  };
  if (m.kind == EvalKind::kNoisyShots) {
    m.noise.p01 = as_vec("p01");
    m.noise.p10 = as_vec("p10");
  }
  m.validate();
}

// ---------------------------------------------------------------- kernels

double kernel_exact(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y) {
  auto a = fmap::encode(spec, x);
  auto b = fmap::encode(spec, y);
  return std::norm(sim::inner_product(a, b));
}

sim::QuantumState composed_state(const fmap::FeatureMapSpec& spec, std::span<const double> x,
                                 std::span<const double> y) {
  auto s = fmap::encode(spec, y);
  s.run(sim::inverse(fmap::build_circuit(spec, x)));
  return s;
}

namespace {

double zero_probability_estimate(const sim::QuantumState& composed, const KernelEvalMode& mode, std::uint64_t seed) {
  const std::uint64_t sample_seed = derive_seed(seed, 0x5a);
  auto counts = sim::sample_counts(composed, mode.n_shots, sample_seed);
  if (mode.kind == EvalKind::kShots) return static_cast<double>(counts.counts[0]) / static_cast<double>(mode.n_shots);
  const auto noise = mode.noise.resized(composed.n_qubits());
  auto noisy = apply_readout_noise(counts, noise, derive_seed(seed, 0xa5));
  if (!mode.mitigate) return static_cast<double>(noisy.counts[0]) / static_cast<double>(mode.n_shots);
  return clip_quasi_probabilities(mitigate_readout(noisy, noise))[0];
}

}  // namespace

double kernel_shots(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y,
                    std::uint64_t n_shots, std::uint64_t seed) {
  return zero_probability_estimate(composed_state(spec, x, y), KernelEvalMode::shots(n_shots, seed), seed);
}

double kernel_noisy(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y,
                    std::uint64_t n_shots, std::uint64_t seed, const ReadoutNoiseModel& noise, bool mitigate) {
  return zero_probability_estimate(composed_state(spec, x, y),
                                   KernelEvalMode::noisy_shots(n_shots, seed, noise, mitigate), seed);
}

sim::Counts apply_readout_noise(const sim::Counts& counts, const ReadoutNoiseModel& noise, std::uint64_t seed) {
  require(noise.n_qubits() == counts.n_qubits, ErrorKind::kDimension, "noise model / histogram qubit mismatch");
  noise.validate();
  if (noise.is_zero()) return counts;
  Rng rng(seed);
  sim::Counts cur = counts;
  // Qubit by qubit: from each outcome, move Binomial(count, p_flip) shots to
  // the outcome with that bit flipped. Flips are independent per shot and
  // per qubit, so the sequential passes compose to the joint channel.
  for (std::size_t q = 0; q < counts.n_qubits; ++q) {
    const std::size_t bit = std::size_t{1} << q;
    sim::Counts next{cur.n_qubits, std::vector<std::uint64_t>(cur.counts.size(), 0)};
    for (std::size_t k = 0; k < cur.counts.size(); ++k) {
      const std::uint64_t c = cur.counts[k];
      if (c == 0) continue;
      const double p = (k & bit) ? noise.p10[q] : noise.p01[q];
      std::uint64_t flipped = 0;
      if (p > 0.0) {
        std::binomial_distribution<std::uint64_t> bin(c, p);
        flipped = bin(rng);
      }
      next.counts[k] += c - flipped;
      next.counts[k ^ bit] += flipped;
    }
    cur = std::move(next);
  }
  return cur;
}

Matrix confusion_matrix(const ReadoutNoiseModel& noise) {
  noise.validate();
  const std::size_t n = noise.n_qubits();
  const std::size_t dim = std::size_t{1} << n;
  Matrix a(dim, dim);
  for (std::size_t read = 0; read < dim; ++read) {
    for (std::size_t truth = 0; truth < dim; ++truth) {
      double p = 1.0;
      for (std::size_t q = 0; q < n; ++q) {
        const bool t = truth >> q & 1;
        const bool r = read >> q & 1;
        if (!t) p *= r ? noise.p01[q] : 1.0 - noise.p01[q];
        else p *= r ? 1.0 - noise.p10[q] : noise.p10[q];
      }
      a(read, truth) = p;
    }
  }
  return a;
}

namespace {

// Applies the 2×2 matrix [[m00, m01], [m10, m11]] on qubit q of a vector.
void apply_qubit_map(std::vector<double>& v, std::size_t q, double m00, double m01, double m10, double m11) {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k & bit) continue;
    const double a0 = v[k];
    const double a1 = v[k | bit];
    v[k] = m00 * a0 + m01 * a1;
    v[k | bit] = m10 * a0 + m11 * a1;
  }
}

}  // namespace

std::vector<double> apply_confusion(std::span<const double> probs, const ReadoutNoiseModel& noise) {
  noise.validate();
  require(probs.size() == (std::size_t{1} << noise.n_qubits()), ErrorKind::kDimension,
          "distribution size does not match noise model");
  std::vector<double> v(probs.begin(), probs.end());
  for (std::size_t q = 0; q < noise.n_qubits(); ++q)
    apply_qubit_map(v, q, 1.0 - noise.p01[q], noise.p10[q], noise.p01[q], 1.0 - noise.p10[q]);
  return v;
}

std::vector<double> apply_confusion_inverse(std::span<const double> probs, const ReadoutNoiseModel& noise) {
  noise.validate();
  require(probs.size() == (std::size_t{1} << noise.n_qubits()), ErrorKind::kDimension,
          "distribution size does not match noise model");
  std::vector<double> v(probs.begin(), probs.end());
  for (std::size_t q = 0; q < noise.n_qubits(); ++q) {
    const double a = 1.0 - noise.p01[q], b = noise.p10[q], c = noise.p01[q], d = 1.0 - noise.p10[q];
    const double det = a * d - b * c;  // = 1 - p01 - p10 > 0
    apply_qubit_map(v, q, d / det, -b / det, -c / det, a / det);
  }
  return v;
}

std::vector<double> mitigate_readout(const sim::Counts& counts, const ReadoutNoiseModel& noise) {
  require(noise.n_qubits() == counts.n_qubits, ErrorKind::kDimension, "noise model / histogram qubit mismatch");
  const auto f = counts.frequencies();
  if (noise.is_zero()) return f;
  return apply_confusion_inverse(f, noise);
}

std::vector<double> clip_quasi_probabilities(std::vector<double> q) {
  double total = 0.0;
  for (auto& v : q) {
    v = std::max(v, 0.0);
    total += v;
  }
  if (total > 0.0)
    for (auto& v : q) v /= total;
  return q;
}

// ---------------------------------------------------------------- Gram

namespace {

std::vector<fmap::EncodedPoint> encode_rows(const fmap::FeatureMapSpec& spec, const Matrix& rows, std::size_t jobs) {
  std::vector<std::optional<fmap::EncodedPoint>> tmp(rows.rows());
  parallel_for(rows.rows(), [&](std::size_t i) { tmp[i].emplace(spec, rows.row(i)); }, jobs);
  std::vector<fmap::EncodedPoint> out;
  out.reserve(rows.rows());
  for (auto& t : tmp) out.push_back(std::move(*t));
  return out;
}

double entry(const fmap::EncodedPoint& x, const fmap::EncodedPoint& y, const KernelEvalMode& mode,
             std::uint64_t seed) {
  if (mode.kind == EvalKind::kExact) return std::norm(simd::cdot(x.state().amplitudes(), y.state().amplitudes()));
  sim::QuantumState s = y.state();
  x.apply_inverse(s);
  return zero_probability_estimate(s, mode, seed);
}

void check_spec(const fmap::FeatureMapSpec& spec, const Matrix& m) {
  require(m.cols() == spec.n_features, ErrorKind::kDimension,
          "rows have " + std::to_string(m.cols()) + " features, map expects " + std::to_string(spec.n_features));
}

}  // namespace

Matrix gram(const fmap::FeatureMapSpec& spec, const Matrix& rows, const KernelEvalMode& mode, std::size_t jobs) {
  mode.validate();
  check_spec(spec, rows);
  const std::size_t n = rows.rows();
  const auto enc = encode_rows(spec, rows, jobs);
  Matrix k(n, n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const std::size_t start = mode.kind == EvalKind::kExact ? i + 1 : i;
        if (mode.kind == EvalKind::kExact) k(i, i) = 1.0;
        for (std::size_t j = start; j < n; ++j) k(i, j) = entry(enc[i], enc[j], mode, derive_seed(mode.seed, i, j));
      },
      jobs);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) k(j, i) = k(i, j);
  if (mode.kind != EvalKind::kExact && mode.psd_clip) clip_psd(k);
  return k;
}

Matrix gram_cross(const fmap::FeatureMapSpec& spec, const Matrix& train, const Matrix& test,
                  const KernelEvalMode& mode, std::size_t jobs) {
  mode.validate();
  check_spec(spec, train);
  check_spec(spec, test);
  const auto enc_train = encode_rows(spec, train, jobs);
  const auto enc_test = encode_rows(spec, test, jobs);
  Matrix k(test.rows(), train.rows());
  parallel_for(
      test.rows(),
      [&](std::size_t i) {
        for (std::size_t j = 0; j < train.rows(); ++j)
          k(i, j) = entry(enc_test[i], enc_train[j], mode, derive_seed(mode.seed, i, j, 1));
      },
      jobs);
  return k;
}

void clip_psd(Matrix& k) {
  require(k.rows() == k.cols(), ErrorKind::kDimension, "clip_psd needs a square matrix");
  const auto n = static_cast<Eigen::Index>(k.rows());
  if (n == 0) return;
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(k.data().data(), n, n);
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) return;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  m = 0.5 * (r + r.transpose());
}

double min_eigenvalue(const Matrix& k) {
  require(k.rows() == k.cols(), ErrorKind::kDimension, "min_eigenvalue needs a square matrix");
  const auto n = static_cast<Eigen::Index>(k.rows());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(k.data().data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------- cache

namespace {
constexpr char kMagic[4] = {'Q', 'K', 'F', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "cache format assumes little-endian");
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool get(std::ifstream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}
}  // namespace

void save_kernel_cache(const std::filesystem::path& path, std::uint64_t key, const Matrix& k) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write kernel cache " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, key);
  put(out, static_cast<std::uint64_t>(k.rows()));
  put(out, static_cast<std::uint64_t>(k.cols()));
  out.write(reinterpret_cast<const char*>(k.data().data()), static_cast<std::streamsize>(k.data().size_bytes()));
}

std::optional<Matrix> load_kernel_cache(const std::filesystem::path& path, std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return std::nullopt;
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t stored = 0, rows = 0, cols = 0;
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) return std::nullopt;
  if (!get(in, version) || version != kVersion) return std::nullopt;
  if (!get(in, stored) || stored != key) return std::nullopt;
  if (!get(in, rows) || !get(in, cols)) return std::nullopt;
  Matrix k(rows, cols);
  if (!in.read(reinterpret_cast<char*>(k.data().data()), static_cast<std::streamsize>(k.data().size_bytes())))
    return std::nullopt;
  return k;
}

std::uint64_t kernel_cache_key(std::uint64_t dataset_hash, std::span<const std::size_t> features,
                               const fmap::FeatureMapSpec& spec, const KernelEvalMode& mode) {
  nlohmann::json j;
  j["data"] = dataset_hash;
  j["features"] = std::vector<std::size_t>(features.begin(), features.end());
  j["map"] = spec;
  j["mode"] = mode;
  return fnv1a64(j.dump());
}

}  // namespace qkf::qkernel
