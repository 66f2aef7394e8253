// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <cmath>

#include "qkf/classical.hpp"
#include "qkf/error.hpp"

namespace qkf::classical {

void to_json(nlohmann::json& j, const LogisticModel& m) {
  j = nlohmann::json{{"weights", m.weights},
                     {"intercept", m.intercept},
                     {"l2", m.l2},
                     {"grad_norm", m.grad_norm},
                     {"iterations", m.iterations}};
}

void from_json(const nlohmann::json& j, LogisticModel& m) {
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.l2 = j.value("l2", 0.0);
  m.grad_norm = j.value("grad_norm", 0.0);
  m.iterations = j.value("iterations", std::size_t{0});
}

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

LogisticModel train_logistic(const Matrix& X, std::span<const int> labels, double l2) {
  require(X.rows() > 0, ErrorKind::kInvalidArgument, "training data is empty");
  require(labels.size() == X.rows(), ErrorKind::kDimension, "label count does not match row count");
  require(l2 >= 0.0 && std::isfinite(l2), ErrorKind::kInvalidArgument, "l2 must be >= 0");
  bool pos = false, neg = false;
  for (int y : labels) {
    require(y == 0 || y == 1, ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    (y == 1 ? pos : neg) = true;
  }
  require(pos && neg, ErrorKind::kInvalidArgument, "logistic training labels contain a single class");

  const std::size_t n = X.rows(), m = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  // Column m is the intercept.
  Eigen::MatrixXd A(n, m + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) A(i, c) = X(i, c);
    A(i, m) = 1.0;
    y(i) = labels[i];
  }
  Eigen::VectorXd pen = Eigen::VectorXd::Constant(m + 1, l2);
  pen(m) = 0.0;

  auto loss = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd z = A * w;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += softplus(z(i)) - y(i) * z(i);
    return s * inv_n + 0.5 * w.cwiseProduct(pen).dot(w);
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m + 1);
  LogisticModel model;
  model.l2 = l2;
  double f = loss(w);
  constexpr std::size_t kMaxIter = 200;
  std::size_t it = 0;
  double gnorm = 0.0;
  for (;; ++it) {
    const Eigen::VectorXd z = A * w;
    Eigen::VectorXd p(n), h(n);
    for (std::size_t i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      h(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd g = A.transpose() * (p - y) * inv_n + pen.cwiseProduct(w);
    gnorm = g.norm();
    if (gnorm < 1e-6 || it >= kMaxIter) break;
    Eigen::MatrixXd H = A.transpose() * h.asDiagonal() * A * inv_n;
    H.diagonal() += pen;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = H.ldlt().solve(g);
    double t = 1.0;
    Eigen::VectorXd w_new = w - step;
    double f_new = loss(w_new);
    while (f_new > f - 1e-4 * t * g.dot(step) && t > 1e-10) {
      t *= 0.5;
      w_new = w - t * step;
      f_new = loss(w_new);
    }
    if (!(f_new <= f)) break;
    w = w_new;
    f = f_new;
  }
  model.weights.assign(w.data(), w.data() + m);
  model.intercept = w(m);
  model.grad_norm = gnorm;
  model.iterations = it;
  return model;
}

LogisticModel train_logistic(const Dataset& data, double l2) {
  std::vector<int> y(data.labels.begin(), data.labels.end());
  return train_logistic(data.numeric_matrix(), y, l2);
}

std::vector<double> predict_logistic(const LogisticModel& model, const Matrix& X) {
  require(X.cols() == model.weights.size(), ErrorKind::kDimension, "logistic model feature count mismatch");
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double z = model.intercept;
    for (std::size_t c = 0; c < X.cols(); ++c) z += model.weights[c] * X(r, c);
    out[r] = sigmoid(z);
  }
  return out;
}

}  // namespace qkf::classical
