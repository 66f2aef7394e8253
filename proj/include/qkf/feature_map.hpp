// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qkf/statevector.hpp"

namespace qkf::fmap {

enum class Order { kZ, kZZ };
enum class Entanglement { kFull, kLinear };

/// Data-encoding circuit U(x) = [D(x)·H^⊗n]^depth.
///
/// D(x) applies Phase(2·alpha·x_i) on every qubit i and, for the ZZ order,
/// CX(i,j)·Phase_j(2·alpha·(π−x_i)(π−x_j))·CX(i,j) on every entangled pair.
/// Full entanglement takes all pairs i<j in lexicographic order; linear takes
/// (i, i+1).
struct FeatureMapSpec {
  Order order = Order::kZZ;
  std::size_t depth = 2;
  Entanglement entanglement = Entanglement::kFull;
  double alpha = 2.0;
  std::size_t n_features = 0;

  void validate() const;
  FeatureMapSpec with_features(std::size_t n) const {
    FeatureMapSpec s = *this;
    s.n_features = n;
    return s;
  }
  bool operator==(const FeatureMapSpec&) const = default;
};

/// Keys: order_of_expansion ("Z"|"ZZ"), depth, entanglement ("full"|"linear"),
/// alpha, and optionally n_features.
void to_json(nlohmann::json& j, const FeatureMapSpec& s);
void from_json(const nlohmann::json& j, FeatureMapSpec& s);

/// Short label such as "ZZ-d2".
std::string label(const FeatureMapSpec& s);

std::vector<std::pair<std::size_t, std::size_t>> entangled_pairs(const FeatureMapSpec& spec);

inline double single_map(double xi) { return xi; }
double pair_map(double xi, double xj);

/// Gate-level U(x).
sim::Circuit build_circuit(const FeatureMapSpec& spec, std::span<const double> x);

/// U(x)|0⟩ by running build_circuit gate by gate.
sim::QuantumState encode(const FeatureMapSpec& spec, std::span<const double> x);

/// Diagonal of D(x) in the computational basis:
/// d[b] = exp(i·2α·(Σ_i x_i·b_i + Σ_(i,j) φ_ij(x)·(b_i ⊕ b_j))).
std::vector<sim::cplx> phase_diagonal(const FeatureMapSpec& spec, std::span<const double> x);

/// Precomputed encoding of one data point: the D(x) diagonal and U(x)|0⟩.
/// Equivalent to encode() but uses vectorized diagonal products.
class EncodedPoint {
 public:
  EncodedPoint(const FeatureMapSpec& spec, std::span<const double> x);

  const sim::QuantumState& state() const noexcept { return state_; }
  std::span<const sim::cplx> diagonal() const noexcept { return diag_; }

  /// Applies U(x)† in place.
  void apply_inverse(sim::QuantumState& s) const;

 private:
  std::size_t depth_;
  std::vector<sim::cplx> diag_;
  sim::QuantumState state_;
};

/// ∏_i cos²(alpha·(x_i − y_i)): the fidelity of depth-1 Z encodings.
double z_kernel_closed_form(double alpha, std::span<const double> x, std::span<const double> y);

}  // namespace qkf::fmap
