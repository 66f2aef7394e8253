// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qkf::sim {

using cplx = std::complex<double>;

/// Dense states are capped at 2^14 amplitudes.
inline constexpr std::size_t kMaxQubits = 14;

enum class GateKind { kH, kPhase, kCX };

/// Qubit 0 is the least significant bit of the amplitude index.
struct GateOp {
  GateKind kind = GateKind::kH;
  std::size_t target = 0;
  std::size_t control = 0;  // CX only
  double theta = 0.0;       // Phase only

  static GateOp h(std::size_t q) { return {GateKind::kH, q, 0, 0.0}; }
  /// diag(1, e^{iθ}) on qubit q.
  static GateOp phase(std::size_t q, double theta) { return {GateKind::kPhase, q, 0, theta}; }
  static GateOp cx(std::size_t control, std::size_t target) { return {GateKind::kCX, target, control, 0.0}; }
};

using Circuit = std::vector<GateOp>;

/// Gates in reverse order with negated phases.
Circuit inverse(const Circuit& c);

class QuantumState {
 public:
  /// |0…0⟩ on n qubits; throws Error(kCapacity) above kMaxQubits.
  static QuantumState zero(std::size_t n_qubits);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  std::span<cplx> amplitudes() noexcept { return amps_; }

  /// In-place gate application; throws Error(kDimension) on bad indices.
  QuantumState& apply(const GateOp& op);
  QuantumState& run(const Circuit& c);

  double norm() const;
  std::vector<double> probabilities() const;

 private:
  std::size_t n_qubits_ = 0;
  std::vector<cplx> amps_;
};

/// Value-returning form of QuantumState::apply.
QuantumState apply(QuantumState s, const GateOp& op);

/// ⟨a|b⟩: conjugate-linear in a.
cplx inner_product(const QuantumState& a, const QuantumState& b);

/// Measurement histogram: counts[k] is the number of shots reading basis
/// index k.
struct Counts {
  std::size_t n_qubits = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t shots() const;
  std::vector<double> frequencies() const;
  /// Text form of index k, highest qubit first (qubit 0 rightmost).
  std::string bitstring(std::size_t k) const;
  bool operator==(const Counts&) const = default;
};

/// Multinomial draw of `shots` outcomes from |amplitude|², one conditional
/// binomial per outcome. Deterministic for a given seed on a given
/// standard library.
Counts sample_counts(const QuantumState& s, std::uint64_t shots, std::uint64_t seed);

/// Same draw from an explicit probability vector.
Counts sample_counts(std::span<const double> probs, std::size_t n_qubits, std::uint64_t shots, std::uint64_t seed);

}  // namespace qkf::sim
