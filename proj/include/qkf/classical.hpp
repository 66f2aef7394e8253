// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qkf/dataset.hpp"
#include "qkf/matrix.hpp"

namespace qkf::classical {

// ------------------------------------------------------------------ trees

struct TreeParams {
  std::size_t max_depth = 6;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  /// Candidate features per split; 0 means all.
  std::size_t max_features = 0;
  /// Regression trees only: minimum hessian sum in each child.
  double min_child_weight = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf: class-1 fraction or regression output
  double gain = 0.0;   // weighted impurity decrease of the split
};

/// Binary CART tree; row goes left when x[feature] <= threshold.
struct TreeModel {
  std::vector<TreeNode> nodes;
  TreeParams params;

  double predict(std::span<const double> row) const;
  std::size_t depth() const;
};

void to_json(nlohmann::json& j, const TreeModel& t);
void from_json(const nlohmann::json& j, TreeModel& t);

/// Gini classification tree on `rows` (indices into X). Leaves hold the
/// class-1 fraction. Ties on gain go to the lowest feature index, then the
/// lowest threshold. With max_features > 0 the candidate features of each
/// split are drawn from `seed`.
TreeModel fit_classification_tree(const Matrix& X, std::span<const int> labels, std::span<const std::size_t> rows,
                                  const TreeParams& params, std::uint64_t seed = 0);

/// Squared-error regression tree on targets; `hessian` only feeds the
/// min_child_weight constraint. Leaves hold the mean target.
TreeModel fit_regression_tree(const Matrix& X, std::span<const double> targets, std::span<const double> hessian,
                              std::span<const std::size_t> rows, const TreeParams& params);

// ------------------------------------------------------------------ forest

struct ForestParams {
  std::size_t n_estimators = 100;
  std::size_t max_depth = 8;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  /// Fraction of features tried per split; 0 means sqrt(m).
  double max_features = 0.0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const ForestParams& p);
void from_json(const nlohmann::json& j, ForestParams& p);

struct ForestModel {
  std::vector<TreeModel> trees;
  ForestParams params;
  std::vector<std::uint64_t> tree_seeds;
  std::vector<double> importance;  // normalized split-gain totals
};

void to_json(nlohmann::json& j, const ForestModel& m);
void from_json(const nlohmann::json& j, ForestModel& m);

/// Each tree fits a bootstrap sample drawn with seed derive_seed(seed, t).
ForestModel train_forest(const Matrix& X, std::span<const int> labels, const ForestParams& params);
ForestModel train_forest(const Dataset& data, const ForestParams& params);
/// Mean of per-tree leaf class-1 fractions.
std::vector<double> predict_forest(const ForestModel& model, const Matrix& X);

// ------------------------------------------------------------------ boosting

/// First-order gradient boosting with logistic loss. Trees fit the negative
/// gradient (y − p) by squared error; leaves output the mean residual.
/// No Hessian-weighted leaf values and no column subsampling.
struct GbtParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 3;
  double min_child_weight = 1.0;
  std::size_t min_samples_leaf = 1;
};

void to_json(nlohmann::json& j, const GbtParams& p);
void from_json(const nlohmann::json& j, GbtParams& p);

struct GbtModel {
  std::vector<TreeModel> trees;
  GbtParams params;
  double init_logodds = 0.0;
  std::vector<double> train_logloss;  // before round 1, then after each round
  std::vector<double> importance;
};

void to_json(nlohmann::json& j, const GbtModel& m);
void from_json(const nlohmann::json& j, GbtModel& m);

GbtModel train_gbt(const Matrix& X, std::span<const int> labels, const GbtParams& params);
GbtModel train_gbt(const Dataset& data, const GbtParams& params);
/// sigmoid(init + lr·Σ tree outputs)
std::vector<double> predict_gbt(const GbtModel& model, const Matrix& X);

// ------------------------------------------------------------------ logistic

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;
  double l2 = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

void to_json(nlohmann::json& j, const LogisticModel& m);
void from_json(const nlohmann::json& j, LogisticModel& m);

/// Newton's method on the mean log-likelihood with penalty ½·l2·‖w‖²
/// (intercept unpenalized), until the gradient norm is below 1e-6.
LogisticModel train_logistic(const Matrix& X, std::span<const int> labels, double l2);
LogisticModel train_logistic(const Dataset& data, double l2);
std::vector<double> predict_logistic(const LogisticModel& model, const Matrix& X);

double log_loss(std::span<const int> labels, std::span<const double> probs);

// ------------------------------------------------------------------ search

enum class ModelKind { kForest, kGbt, kLogistic };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

using AnyModel = std::variant<ForestModel, GbtModel, LogisticModel>;

/// Trains from a JSON parameter object of the kind's param struct.
AnyModel fit(ModelKind kind, const nlohmann::json& params, const Matrix& X, std::span<const int> labels);
std::vector<double> predict(const AnyModel& model, const Matrix& X);
/// Normalized split-gain importance; empty for logistic models.
std::vector<double> feature_importance(const AnyModel& model);

void to_json(nlohmann::json& j, const AnyModel& m);
AnyModel any_model_from_json(const nlohmann::json& j);

enum class Objective { kAccuracy, kAuc };

struct SearchSpec {
  std::size_t n_candidates = 10;
  std::size_t k_folds = 3;
  std::uint64_t seed = 0;
  Objective objective = Objective::kAccuracy;
  void validate() const;
};

struct SearchRow {
  nlohmann::json params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
};

struct SearchResult {
  nlohmann::json best_params;
  double best_score = 0.0;
  std::vector<SearchRow> table;
};

/// Draws parameter sets from fixed per-kind distributions; the first draw of
/// each kind is its default parameter set. Each candidate is scored by
/// k-fold cross-validation over one seeded shuffled fold assignment.
std::vector<nlohmann::json> sample_candidates(ModelKind kind, std::size_t n, std::uint64_t seed);

SearchResult randomized_search(const Matrix& X, std::span<const int> labels, ModelKind kind, const SearchSpec& spec);

/// Search over an explicit candidate list.
SearchResult grid_search(const Matrix& X, std::span<const int> labels, ModelKind kind,
                         const std::vector<nlohmann::json>& candidates, const SearchSpec& spec);

}  // namespace qkf::classical
