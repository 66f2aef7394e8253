// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "qkf/matrix.hpp"

namespace qkf::svm {

enum class ClassicalKind { kLinear, kRbf };

struct ClassicalKernelSpec {
  ClassicalKind kind = ClassicalKind::kRbf;
  double gamma = 1.0;
  void validate() const;
};

void to_json(nlohmann::json& j, const ClassicalKernelSpec& s);
void from_json(const nlohmann::json& j, ClassicalKernelSpec& s);

/// rows_a × rows_b matrix of k(a_i, b_j): ⟨a,b⟩ or exp(−gamma·‖a−b‖²).
Matrix classical_gram(const ClassicalKernelSpec& spec, const Matrix& rows_a, const Matrix& rows_b);

struct TrainOptions {
  double C = 1.0;
  double tol = 1e-3;
  /// 0 selects max(10^7, 100·n).
  std::size_t max_iter = 0;
  /// Keep the dual objective after every iteration in SvmModel::objective_trace.
  bool record_objective = false;
  /// Return the last iterate instead of throwing when max_iter is hit.
  bool allow_unconverged = false;
};

/// Soft-margin C-SVM in dual form. f(x) = Σ dual_coefs[i]·k(x_i, x) + bias.
struct SvmModel {
  std::vector<double> dual_coefs;  // α_i·y_i, one per training row
  double bias = 0.0;
  std::vector<std::size_t> support_indices;
  double C = 1.0;
  double tol = 1e-3;
  std::size_t iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;
  /// How k(·,·) is evaluated at scoring time (map spec, classical spec, ...).
  nlohmann::json kernel_ref;
  /// Feature rows of the support vectors, in support_indices order.
  Matrix support_vectors;

  std::size_t n_train() const noexcept { return dual_coefs.size(); }
  /// α_i recovered as |dual_coefs[i]|.
  std::vector<double> alphas() const;
};

void to_json(nlohmann::json& j, const SvmModel& m);
void from_json(const nlohmann::json& j, SvmModel& m);

/// Maps 0/1 labels to −1/+1.
std::vector<int> to_signed(std::span<const int> labels01);

/// Sequential minimal optimization with maximal-violating-pair working set
/// selection. Stops when the violation gap m(α) − M(α) drops below tol.
/// Throws Error(kInvalidArgument) on single-class labels, Error(kNumeric) on
/// non-finite Gram entries, Error(kConvergence) when max_iter is exhausted.
SvmModel train(const Matrix& gram, std::span<const int> labels, const TrainOptions& opts = {});

/// Σ α − ½ Σ α_i α_j y_i y_j K_ij.
double dual_objective(const Matrix& gram, std::span<const int> labels, std::span<const double> alpha);

/// Scores for points given their kernel values against the training rows:
/// cross has one row per point and either n_train columns or one column
/// per support vector (support_indices order).
std::vector<double> decision_scores(const SvmModel& model, const Matrix& cross);

/// Scores from the support vectors stored in the model under a classical kernel.
std::vector<double> decision_scores(const SvmModel& model, const ClassicalKernelSpec& spec, const Matrix& rows);

}  // namespace qkf::svm
