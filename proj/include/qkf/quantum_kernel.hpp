// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "qkf/feature_map.hpp"
#include "qkf/matrix.hpp"
#include "qkf/statevector.hpp"

namespace qkf::qkernel {

/// Independent per-qubit readout flips. p01: read 1 given 0; p10: read 0
/// given 1. Both in [0, 0.5) so every confusion matrix is invertible.
struct ReadoutNoiseModel {
  std::vector<double> p01;
  std::vector<double> p10;

  static ReadoutNoiseModel uniform(std::size_t n_qubits, double p01, double p10);
  std::size_t n_qubits() const noexcept { return p01.size(); }
  bool is_zero() const;
  void validate() const;
  /// First n qubits of this model, or the uniform extension when the model
  /// was given as a single per-qubit pair.
  ReadoutNoiseModel resized(std::size_t n) const;
};

enum class EvalKind { kExact, kShots, kNoisyShots };

struct KernelEvalMode {
  EvalKind kind = EvalKind::kExact;
  std::uint64_t n_shots = 8192;
  std::uint64_t seed = 0;
  ReadoutNoiseModel noise;  // kNoisyShots; resized to the qubit count per use
  bool mitigate = false;
  /// Clip negative eigenvalues of sampled Gram matrices before training.
  bool psd_clip = true;

  static KernelEvalMode exact() { return {}; }
  static KernelEvalMode shots(std::uint64_t n_shots, std::uint64_t seed);
  static KernelEvalMode noisy_shots(std::uint64_t n_shots, std::uint64_t seed, ReadoutNoiseModel noise, bool mitigate);

  void validate() const;
  std::string label() const;
};

void to_json(nlohmann::json& j, const KernelEvalMode& m);
void from_json(const nlohmann::json& j, KernelEvalMode& m);

/// |⟨ψ(x)|ψ(y)⟩|² from gate-level encodings.
double kernel_exact(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y);

/// State U(x)†U(y)|0⟩; its all-zeros probability is the exact kernel.
sim::QuantumState composed_state(const fmap::FeatureMapSpec& spec, std::span<const double> x,
                                 std::span<const double> y);

/// Frequency of the all-zeros outcome over n_shots samples of the composed
/// circuit.
double kernel_shots(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y,
                    std::uint64_t n_shots, std::uint64_t seed);

/// Shot estimate after readout noise, optionally mitigated.
double kernel_noisy(const fmap::FeatureMapSpec& spec, std::span<const double> x, std::span<const double> y,
                    std::uint64_t n_shots, std::uint64_t seed, const ReadoutNoiseModel& noise, bool mitigate);

/// Flips each measured bit of each shot independently.
sim::Counts apply_readout_noise(const sim::Counts& counts, const ReadoutNoiseModel& noise, std::uint64_t seed);

/// Dense 2^n × 2^n calibration matrix A (column = true outcome, row = read
/// outcome), the tensor product of per-qubit [[1-p01, p10], [p01, 1-p10]].
Matrix confusion_matrix(const ReadoutNoiseModel& noise);

/// A·p without forming A: per-qubit 2×2 products.
std::vector<double> apply_confusion(std::span<const double> probs, const ReadoutNoiseModel& noise);

/// A⁻¹·p via the tensor product of per-qubit inverses. Output sums to the
/// input mass and may contain small negative entries.
std::vector<double> apply_confusion_inverse(std::span<const double> probs, const ReadoutNoiseModel& noise);

/// Quasi-probabilities A⁻¹·f for the empirical distribution f of `counts`.
std::vector<double> mitigate_readout(const sim::Counts& counts, const ReadoutNoiseModel& noise);

/// Negative entries clipped to 0, then renormalized to sum 1.
std::vector<double> clip_quasi_probabilities(std::vector<double> q);

/// Symmetric Gram matrix over the rows of `rows`. Upper triangle computed
/// once and mirrored; exact-mode diagonal set to 1. Sampled entries use the
/// seed derive_seed(mode.seed, i, j) so results do not depend on `jobs`.
Matrix gram(const fmap::FeatureMapSpec& spec, const Matrix& rows, const KernelEvalMode& mode, std::size_t jobs = 0);

/// Cross matrix: one row per test point, one column per training point.
Matrix gram_cross(const fmap::FeatureMapSpec& spec, const Matrix& train, const Matrix& test,
                  const KernelEvalMode& mode, std::size_t jobs = 0);

/// Projects a symmetric matrix onto the PSD cone (negative eigenvalues -> 0).
void clip_psd(Matrix& k);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& k);

/// Binary Gram cache: "QKFK" magic, version, 64-bit key, rows, cols, then
/// little-endian doubles. load returns nullopt on missing file or key mismatch.
void save_kernel_cache(const std::filesystem::path& path, std::uint64_t key, const Matrix& k);
std::optional<Matrix> load_kernel_cache(const std::filesystem::path& path, std::uint64_t key);

/// Cache key from dataset hash, feature subset, map and evaluation mode.
std::uint64_t kernel_cache_key(std::uint64_t dataset_hash, std::span<const std::size_t> features,
                               const fmap::FeatureMapSpec& spec, const KernelEvalMode& mode);

}  // namespace qkf::qkernel
