// SPDX-License-Identifier: Apache-2.0
#include "qkf/feature_map.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "qkf/error.hpp"
#include "qkf/simd.hpp"

namespace qkf::fmap {

void FeatureMapSpec::validate() const {
  require(depth >= 1, ErrorKind::kInvalidArgument, "feature map depth must be >= 1");
  require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::kInvalidArgument, "feature map alpha must be > 0");
  require(n_features >= 1 && n_features <= sim::kMaxQubits, ErrorKind::kCapacity,
          "feature map needs 1.." + std::to_string(sim::kMaxQubits) + " features, got " + std::to_string(n_features));
}

void to_json(nlohmann::json& j, const FeatureMapSpec& s) {
  j = nlohmann::json{{"order_of_expansion", s.order == Order::kZ ? "Z" : "ZZ"},
                     {"depth", s.depth},
                     {"entanglement", s.entanglement == Entanglement::kFull ? "full" : "linear"},
                     {"alpha", s.alpha}};
  if (s.n_features > 0) j["n_features"] = s.n_features;
}

void from_json(const nlohmann::json& j, FeatureMapSpec& s) {
  static const std::set<std::string> kKeys = {"order_of_expansion", "depth", "entanglement", "alpha", "n_features"};
  for (const auto& [key, _] : j.items())
    require(kKeys.count(key) > 0, ErrorKind::kSchema, "unknown feature map key: " + key);
  FeatureMapSpec d;
  const std::string order = j.value("order_of_expansion", std::string("ZZ"));
  require(order == "Z" || order == "ZZ", ErrorKind::kSchema, "order_of_expansion must be Z or ZZ");
  const std::string ent = j.value("entanglement", std::string("full"));
  require(ent == "full" || ent == "linear", ErrorKind::kSchema, "entanglement must be full or linear");
  s.order = order == "Z" ? Order::kZ : Order::kZZ;
  s.entanglement = ent == "full" ? Entanglement::kFull : Entanglement::kLinear;
  s.depth = j.value("depth", d.depth);
  s.alpha = j.value("alpha", d.alpha);
  s.n_features = j.value("n_features", std::size_t{0});
}

std::string label(const FeatureMapSpec& s) {
  std::string l = (s.order == Order::kZ ? "Z" : "ZZ");
  l += "-d" + std::to_string(s.depth);
  if (s.order == Order::kZZ && s.entanglement == Entanglement::kLinear) l += "-linear";
  return l;
}

std::vector<std::pair<std::size_t, std::size_t>> entangled_pairs(const FeatureMapSpec& spec) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (spec.order == Order::kZ) return pairs;
  const std::size_t n = spec.n_features;
  if (spec.entanglement == Entanglement::kFull) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  }
  return pairs;
}

double pair_map(double xi, double xj) { return (std::numbers::pi - xi) * (std::numbers::pi - xj); }

namespace {
void check_input(const FeatureMapSpec& spec, std::span<const double> x) {
  spec.validate();
  require(x.size() == spec.n_features, ErrorKind::kDimension,
          "feature vector has " + std::to_string(x.size()) + " entries, map expects " + std::to_string(spec.n_features));
  for (double v : x) require(std::isfinite(v), ErrorKind::kInvalidArgument, "feature value is not finite");
}
}  // namespace

sim::Circuit build_circuit(const FeatureMapSpec& spec, std::span<const double> x) {
  check_input(spec, x);
  const std::size_t n = spec.n_features;
  const auto pairs = entangled_pairs(spec);
  sim::Circuit c;
  c.reserve(spec.depth * (2 * n + 3 * pairs.size()));
  for (std::size_t rep = 0; rep < spec.depth; ++rep) {
    for (std::size_t q = 0; q < n; ++q) c.push_back(sim::GateOp::h(q));
    for (std::size_t q = 0; q < n; ++q) c.push_back(sim::GateOp::phase(q, 2.0 * spec.alpha * single_map(x[q])));
    for (auto [i, j] : pairs) {
      c.push_back(sim::GateOp::cx(i, j));
      c.push_back(sim::GateOp::phase(j, 2.0 * spec.alpha * pair_map(x[i], x[j])));
      c.push_back(sim::GateOp::cx(i, j));
    }
  }
  return c;
}

sim::QuantumState encode(const FeatureMapSpec& spec, std::span<const double> x) {
  auto c = build_circuit(spec, x);
  auto s = sim::QuantumState::zero(spec.n_features);
  s.run(c);
  return s;
}

std::vector<sim::cplx> phase_diagonal(const FeatureMapSpec& spec, std::span<const double> x) {
  check_input(spec, x);
  const std::size_t n = spec.n_features;
  const auto pairs = entangled_pairs(spec);
  std::vector<double> pair_angle(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) pair_angle[p] = pair_map(x[pairs[p].first], x[pairs[p].second]);
  std::vector<sim::cplx> d(std::size_t{1} << n);
  for (std::size_t b = 0; b < d.size(); ++b) {
    double angle = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      if (b >> q & 1) angle += single_map(x[q]);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (((b >> pairs[p].first) ^ (b >> pairs[p].second)) & 1) angle += pair_angle[p];
    d[b] = std::polar(1.0, 2.0 * spec.alpha * angle);
  }
  return d;
}

EncodedPoint::EncodedPoint(const FeatureMapSpec& spec, std::span<const double> x)
    : depth_(spec.depth), diag_(phase_diagonal(spec, x)), state_(sim::QuantumState::zero(spec.n_features)) {
  const std::size_t n = spec.n_features;
  auto amps = state_.amplitudes();
  for (std::size_t rep = 0; rep < depth_; ++rep) {
    for (std::size_t q = 0; q < n; ++q) simd::hadamard(amps, n, q);
    simd::cmul(amps, diag_);
  }
}

void EncodedPoint::apply_inverse(sim::QuantumState& s) const {
  require(s.dim() == diag_.size(), ErrorKind::kDimension, "state size does not match encoding");
  const std::size_t n = s.n_qubits();
  auto amps = s.amplitudes();
  for (std::size_t rep = 0; rep < depth_; ++rep) {
    simd::cmul_conj(amps, diag_);
    for (std::size_t q = 0; q < n; ++q) simd::hadamard(amps, n, q);
  }
}

double z_kernel_closed_form(double alpha, std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::kDimension, "closed-form kernel: length mismatch");
  double k = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = std::cos(alpha * (x[i] - y[i]));
    k *= c * c;
  }
  return k;
}

}  // namespace qkf::fmap
