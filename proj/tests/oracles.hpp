// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, direct reference implementations used only by the tests. None of
// them calls into the library code they are compared against.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using cmat = Eigen::MatrixXcd;
using cplx = std::complex<double>;

// 2^n × 2^n matrix of a one-qubit gate g acting on qubit q (qubit 0 = LSB).
inline cmat lift(const Eigen::Matrix2cd& g, std::size_t n, std::size_t q) {
  const std::size_t dim = std::size_t{1} << n;
  cmat m = cmat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      if ((r & ~bit) == (c & ~bit))
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = g((r & bit) ? 1 : 0, (c & bit) ? 1 : 0);
  return m;
}

inline cmat hadamard(std::size_t n, std::size_t q) {
  Eigen::Matrix2cd h;
  const double s = 1.0 / std::sqrt(2.0);
  h << s, s, s, -s;
  return lift(h, n, q);
}

inline cmat phase(std::size_t n, std::size_t q, double theta) {
  Eigen::Matrix2cd p;
  p << 1.0, 0.0, 0.0, std::polar(1.0, theta);
  return lift(p, n, q);
}

inline cmat cx(std::size_t n, std::size_t control, std::size_t target) {
  const std::size_t dim = std::size_t{1} << n;
  cmat m = cmat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    const std::size_t r = (c >> control & 1) ? c ^ (std::size_t{1} << target) : c;
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 1.0;
  }
  return m;
}

// U(x) = [D(x)·H^n]^depth with D built gate by gate; full entanglement when zz.
inline cmat feature_map_unitary(const std::vector<double>& x, double alpha, std::size_t depth, bool zz) {
  const std::size_t n = x.size();
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  cmat layer = cmat::Identity(dim, dim);
  for (std::size_t q = 0; q < n; ++q) layer = hadamard(n, q) * layer;
  for (std::size_t q = 0; q < n; ++q) layer = phase(n, q, 2.0 * alpha * x[q]) * layer;
  if (zz)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double phi = (std::numbers::pi - x[i]) * (std::numbers::pi - x[j]);
        layer = cx(n, i, j) * phase(n, j, 2.0 * alpha * phi) * cx(n, i, j) * layer;
      }
  cmat u = cmat::Identity(dim, dim);
  for (std::size_t d = 0; d < depth; ++d) u = layer * u;
  return u;
}

inline double fidelity(const std::vector<double>& x, const std::vector<double>& y, double alpha, std::size_t depth,
                       bool zz) {
  const cmat ux = feature_map_unitary(x, alpha, depth, zz);
  const cmat uy = feature_map_unitary(y, alpha, depth, zz);
  return std::norm(ux.col(0).dot(uy.col(0)));
}

// Euclidean projection onto {0 <= a <= C, y·a = 0} by bisection on the
// multiplier of the equality constraint.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double C) {
  auto at = [&](double nu) {
    std::vector<double> a(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      a[i] = std::clamp(v[i] - nu * y[i], 0.0, C);
      s += y[i] * a[i];
    }
    return std::make_pair(a, s);
  };
  double lo = -1e6, hi = 1e6;  // s(nu) is non-increasing in nu
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (at(mid).second > 0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi)).first;
}

// max Σa − ½ aᵀQa over the SVM dual feasible set, Q_ij = y_i y_j K_ij, by
// accelerated projected gradient ascent.
inline double svm_dual_optimum(const Eigen::MatrixXd& K, const std::vector<int>& y, double C,
                               std::size_t iters = 50000) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * K(i, j);
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  auto obj = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(Q * a); };
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), prev = a, z = a;
  double t = 1.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const Eigen::VectorXd g = Eigen::VectorXd::Ones(n) - Q * z;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = z(i) + step * g(i);
    const auto p = project(v, y, C);
    prev = a;
    a = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = a + ((t - 1.0) / tn) * (a - prev);
    t = tn;
    if (obj(a) < obj(prev)) t = 1.0, z = a;  // restart on non-monotone step
  }
  return obj(a);
}

// P(score_pos > score_neg) + ½ P(tie), over all pairs.
inline double auc_pairs(const std::vector<int>& y, const std::vector<double>& s) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
  return num / den;
}

struct Counts {
  double tp = 0, fp = 0, fn = 0, tp_amount = 0, fn_amount = 0;
};

inline Counts at_threshold(const std::vector<int>& y, const std::vector<double>& s, const std::vector<double>& amt,
                           double thr) {
  Counts c;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool flag = s[i] >= thr;
    if (y[i] == 1 && flag) c.tp += 1, c.tp_amount += amt[i];
    if (y[i] == 1 && !flag) c.fn += 1, c.fn_amount += amt[i];
    if (y[i] == 0 && flag) c.fp += 1;
  }
  return c;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i], sb += b[i], saa += a[i] * a[i], sbb += b[i] * b[i], sab += a[i] * b[i];
  }
  const double cov = sab - sa * sb / n, va = saa - sa * sa / n, vb = sbb - sb * sb / n;
  if (va <= 0 || vb <= 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

inline std::vector<double> uniform_vec(std::mt19937_64& g, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

}  // namespace oracle
