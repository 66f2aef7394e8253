// SPDX-License-Identifier: Apache-2.0
#include "qkf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "qkf/error.hpp"
#include "qkf/simd.hpp"

namespace qkf::svm {

void ClassicalKernelSpec::validate() const {
  if (kind == ClassicalKind::kRbf)
    require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::kInvalidArgument, "rbf gamma must be > 0");
}

void to_json(nlohmann::json& j, const ClassicalKernelSpec& s) {
  j = nlohmann::json{{"kernel", s.kind == ClassicalKind::kLinear ? "linear" : "rbf"}};
  if (s.kind == ClassicalKind::kRbf) j["gamma"] = s.gamma;
}

void from_json(const nlohmann::json& j, ClassicalKernelSpec& s) {
  const std::string k = j.value("kernel", std::string("rbf"));
  require(k == "linear" || k == "rbf", ErrorKind::kSchema, "kernel must be linear or rbf");
  s.kind = k == "linear" ? ClassicalKind::kLinear : ClassicalKind::kRbf;
  s.gamma = j.value("gamma", 1.0);
  s.validate();
}

Matrix classical_gram(const ClassicalKernelSpec& spec, const Matrix& rows_a, const Matrix& rows_b) {
  spec.validate();
  require(rows_a.cols() == rows_b.cols(), ErrorKind::kDimension, "classical_gram: feature count mismatch");
  Matrix k(rows_a.rows(), rows_b.rows());
  for (std::size_t i = 0; i < rows_a.rows(); ++i) {
    for (std::size_t j = 0; j < rows_b.rows(); ++j) {
      k(i, j) = spec.kind == ClassicalKind::kLinear ? simd::dot(rows_a.row(i), rows_b.row(j))
                                                    : std::exp(-spec.gamma * simd::sqdist(rows_a.row(i), rows_b.row(j)));
    }
  }
  return k;
}

std::vector<double> SvmModel::alphas() const {
  std::vector<double> a(dual_coefs.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(dual_coefs[i]);
  return a;
}

void to_json(nlohmann::json& j, const SvmModel& m) {
  std::vector<double> coefs;
  for (std::size_t i : m.support_indices) coefs.push_back(m.dual_coefs[i]);
  j = nlohmann::json{{"n_train", m.dual_coefs.size()},
                     {"support_indices", m.support_indices},
                     {"support_dual_coefs", coefs},
                     {"bias", m.bias},
                     {"C", m.C},
                     {"tol", m.tol},
                     {"iterations", m.iterations},
                     {"kernel", m.kernel_ref}};
  if (!m.support_vectors.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.support_vectors.rows(); ++r) {
      auto row = m.support_vectors.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["support_vectors"] = std::move(rows);
  }
}

void from_json(const nlohmann::json& j, SvmModel& m) {
  m = SvmModel{};
  const auto n = j.at("n_train").get<std::size_t>();
  m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
  const auto coefs = j.at("support_dual_coefs").get<std::vector<double>>();
  require(coefs.size() == m.support_indices.size(), ErrorKind::kSchema, "support coefficient count mismatch");
  m.dual_coefs.assign(n, 0.0);
  for (std::size_t k = 0; k < coefs.size(); ++k) {
    require(m.support_indices[k] < n, ErrorKind::kSchema, "support index out of range");
    m.dual_coefs[m.support_indices[k]] = coefs[k];
  }
  m.bias = j.at("bias").get<double>();
  m.C = j.at("C").get<double>();
  m.tol = j.value("tol", 1e-3);
  m.iterations = j.value("iterations", std::size_t{0});
  m.kernel_ref = j.value("kernel", nlohmann::json{});
  if (j.contains("support_vectors"))
    m.support_vectors = Matrix::from_rows(j.at("support_vectors").get<std::vector<std::vector<double>>>());
}

std::vector<int> to_signed(std::span<const int> labels01) {
  std::vector<int> y(labels01.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels01[i] == 1 ? 1 : -1;
  return y;
}

double dual_objective(const Matrix& gram, std::span<const int> labels, std::span<const double> alpha) {
  const std::size_t n = alpha.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * labels[i] * labels[j] * gram(i, j);
  }
  return lin - 0.5 * quad;
}

SvmModel train(const Matrix& gram, std::span<const int> labels, const TrainOptions& opts) {
  const std::size_t n = labels.size();
  require(gram.rows() == n && gram.cols() == n, ErrorKind::kDimension, "Gram matrix must be n×n for n labels");
  require(opts.C > 0.0 && opts.tol > 0.0, ErrorKind::kInvalidArgument, "C and tol must be positive");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    require(y == 1 || y == -1, ErrorKind::kInvalidArgument, "labels must be +1 or -1");
    (y == 1 ? has_pos : has_neg) = true;
  }
  require(has_pos && has_neg, ErrorKind::kInvalidArgument, "training labels contain a single class");
  for (double v : gram.data()) require(std::isfinite(v), ErrorKind::kNumeric, "Gram matrix has non-finite entries");

  const double C = opts.C;
  const double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // G = Qα − e
  auto Q = [&](std::size_t i, std::size_t j) { return labels[i] * labels[j] * gram(i, j); };
  auto is_up = [&](std::size_t t) { return (labels[t] == 1 && alpha[t] < C) || (labels[t] == -1 && alpha[t] > 0); };
  auto is_low = [&](std::size_t t) { return (labels[t] == 1 && alpha[t] > 0) || (labels[t] == -1 && alpha[t] < C); };

  const std::size_t max_iter = opts.max_iter ? opts.max_iter : std::max<std::size_t>(10'000'000, 100 * n);
  SvmModel model;
  model.C = C;
  model.tol = opts.tol;
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };
  if (opts.record_objective) model.objective_trace.push_back(0.0);

  std::size_t iter = 0;
  bool converged = false;
  while (iter < max_iter) {
    std::size_t i = n, j = n;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -labels[t] * grad[t];
      if (is_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (is_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < opts.tol) {
      converged = true;
      break;
    }
    ++iter;

    const double old_ai = alpha[i], old_aj = alpha[j];
    if (labels[i] != labels[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += Q(t, i) * dai + Q(t, j) * daj;
    if (opts.record_objective) model.objective_trace.push_back(objective());
  }
  model.iterations = iter;
  model.converged = converged;
  if (!converged && !opts.allow_unconverged)
    fail(ErrorKind::kConvergence, "SMO did not converge within " + std::to_string(max_iter) + " iterations");

  // Bias: mean over free vectors of −y·G, else midpoint of the feasible range.
  double sum_free = 0.0;
  std::size_t n_free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = labels[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      sum_free += yg;
      ++n_free;
    } else if ((alpha[t] >= C && labels[t] == -1) || (alpha[t] <= 0.0 && labels[t] == 1)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  double rho;
  if (n_free > 0) {
    rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else {
    rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  model.bias = -rho;

  model.dual_coefs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    model.dual_coefs[t] = alpha[t] * labels[t];
    if (alpha[t] > 0.0) model.support_indices.push_back(t);
  }
  return model;
}

std::vector<double> decision_scores(const SvmModel& model, const Matrix& cross) {
  const std::size_t n = model.n_train();
  const bool full = cross.cols() == n;
  require(full || cross.cols() == model.support_indices.size(), ErrorKind::kDimension,
          "cross matrix has " + std::to_string(cross.cols()) + " columns, expected " + std::to_string(n) +
              " training rows or " + std::to_string(model.support_indices.size()) + " support vectors");
  std::vector<double> out(cross.rows(), model.bias);
  for (std::size_t r = 0; r < cross.rows(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < model.support_indices.size(); ++k) {
      const std::size_t t = model.support_indices[k];
      s += model.dual_coefs[t] * cross(r, full ? t : k);
    }
    out[r] += s;
  }
  return out;
}

std::vector<double> decision_scores(const SvmModel& model, const ClassicalKernelSpec& spec, const Matrix& rows) {
  require(model.support_vectors.rows() == model.support_indices.size(), ErrorKind::kInvalidArgument,
          "model carries no support vectors");
  return decision_scores(model, classical_gram(spec, rows, model.support_vectors));
}

}  // namespace qkf::svm
