// SPDX-License-Identifier: Apache-2.0
#include "qkf/statevector.hpp"

#include <algorithm>
#include <random>

#include "qkf/error.hpp"
#include "qkf/rng.hpp"
#include "qkf/simd.hpp"

namespace qkf::sim {

Circuit inverse(const Circuit& c) {
  Circuit out(c.rbegin(), c.rend());
  for (auto& g : out)
    if (g.kind == GateKind::kPhase) g.theta = -g.theta;
  return out;
}

QuantumState QuantumState::zero(std::size_t n_qubits) {
  require(n_qubits >= 1 && n_qubits <= kMaxQubits, ErrorKind::kCapacity,
          "qubit count " + std::to_string(n_qubits) + " outside [1, " + std::to_string(kMaxQubits) + "]");
  QuantumState s;
  s.n_qubits_ = n_qubits;
  s.amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
  s.amps_[0] = 1.0;
  return s;
}

QuantumState& QuantumState::apply(const GateOp& op) {
  require(op.target < n_qubits_, ErrorKind::kDimension, "gate target out of range");
  switch (op.kind) {
    case GateKind::kH:
      simd::hadamard(amps_, n_qubits_, op.target);
      break;
    case GateKind::kPhase: {
      const cplx ph = std::polar(1.0, op.theta);
      const std::size_t bit = std::size_t{1} << op.target;
      for (std::size_t i = 0; i < amps_.size(); ++i)
        if (i & bit) amps_[i] *= ph;
      break;
    }
    case GateKind::kCX: {
      require(op.control < n_qubits_ && op.control != op.target, ErrorKind::kDimension,
              "CX needs distinct in-range control and target");
      const std::size_t cbit = std::size_t{1} << op.control;
      const std::size_t tbit = std::size_t{1} << op.target;
      for (std::size_t i = 0; i < amps_.size(); ++i)
        if ((i & cbit) && !(i & tbit)) std::swap(amps_[i], amps_[i | tbit]);
      break;
    }
  }
  return *this;
}

QuantumState& QuantumState::run(const Circuit& c) {
  for (const auto& g : c) apply(g);
  return *this;
}

double QuantumState::norm() const { return std::sqrt(simd::norm2(amps_)); }

std::vector<double> QuantumState::probabilities() const {
  std::vector<double> p(amps_.size());
  for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
  return p;
}

QuantumState apply(QuantumState s, const GateOp& op) {
  s.apply(op);
  return s;
}

cplx inner_product(const QuantumState& a, const QuantumState& b) {
  require(a.n_qubits() == b.n_qubits(), ErrorKind::kDimension, "inner product of states with different qubit counts");
  return simd::cdot(a.amplitudes(), b.amplitudes());
}

std::uint64_t Counts::shots() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

std::vector<double> Counts::frequencies() const {
  const double total = static_cast<double>(shots());
  std::vector<double> f(counts.size(), 0.0);
  if (total == 0.0) return f;
  for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / total;
  return f;
}

std::string Counts::bitstring(std::size_t k) const {
  std::string s(n_qubits, '0');
  for (std::size_t q = 0; q < n_qubits; ++q)
    if (k & (std::size_t{1} << q)) s[n_qubits - 1 - q] = '1';
  return s;
}

Counts sample_counts(std::span<const double> probs, std::size_t n_qubits, std::uint64_t shots, std::uint64_t seed) {
  require(shots >= 1, ErrorKind::kInvalidArgument, "shots must be >= 1");
  require(probs.size() == (std::size_t{1} << n_qubits), ErrorKind::kDimension, "probability vector size mismatch");
  Rng rng(seed);
  Counts out{n_qubits, std::vector<std::uint64_t>(probs.size(), 0)};
  // Suffix masses make the conditional probability of the last non-zero
  // outcome exactly 1, so no shot can land on a zero-probability outcome.
  std::vector<double> suffix(probs.size() + 1, 0.0);
  for (std::size_t k = probs.size(); k-- > 0;) suffix[k] = suffix[k + 1] + std::max(probs[k], 0.0);
  require(suffix[0] > 0.0, ErrorKind::kNumeric, "probability vector has no mass");
  std::uint64_t remaining = shots;
  for (std::size_t k = 0; k < probs.size() && remaining > 0; ++k) {
    const double p = std::max(probs[k], 0.0);
    if (p <= 0.0) continue;
    const double q = std::min(p / suffix[k], 1.0);
    std::uint64_t draw = remaining;
    if (q < 1.0) {
      std::binomial_distribution<std::uint64_t> bin(remaining, q);
      draw = bin(rng);
    }
    out.counts[k] = draw;
    remaining -= draw;
  }
  return out;
}

Counts sample_counts(const QuantumState& s, std::uint64_t shots, std::uint64_t seed) {
  const auto p = s.probabilities();
  return sample_counts(p, s.n_qubits(), shots, seed);
}

}  // namespace qkf::sim
