// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkf/feature_map.hpp"
#include "qkf/matrix.hpp"
#include "qkf/quantum_kernel.hpp"

namespace qkf::qfis {

enum class Objective { kAccuracy, kAuc };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

/// Scaled train/test feature tables with 0/1 labels.
struct Problem {
  Matrix x_train;
  std::vector<int> y_train;
  Matrix x_test;
  std::vector<int> y_test;
  std::vector<std::string> feature_names;  // optional, one per column

  std::size_t n_features() const noexcept { return x_train.cols(); }
  void validate() const;
};

struct QfisConfig {
  fmap::FeatureMapSpec spec;  // n_features is set per subset
  std::size_t p0 = 3;
  std::size_t target_size = 7;
  Objective objective = Objective::kAccuracy;
  double C = 1.0;
  qkernel::KernelEvalMode mode;
  /// Largest C(m, p0) accepted unless allow_over_budget is set.
  std::uint64_t budget_cap = 200'000;
  bool allow_over_budget = false;
  /// Build Z depth-1 Gram matrices from the cos² product instead of state
  /// vectors. Exact mode only.
  bool closed_form_z = false;
  std::size_t jobs = 0;

  void validate(std::size_t m) const;
};

void to_json(nlohmann::json& j, const QfisConfig& c);
/// Keys: feature_map, p0, target_size, objective, C, eval_mode, budget_cap,
/// allow_over_budget. Unknown keys are rejected.
void from_json(const nlohmann::json& j, QfisConfig& c);

struct SubsetScore {
  std::vector<std::size_t> features;
  double accuracy = 0.0;
  double auc = 0.0;
};

struct StageRecord {
  std::size_t size = 0;                // subset size evaluated at this stage
  std::vector<SubsetScore> evaluated;  // in evaluation order
  std::size_t chosen = 0;              // index into evaluated
};

struct SelectionState {
  std::size_t m = 0;
  std::size_t p0 = 3;
  std::vector<std::size_t> selected;  // in order of selection
  std::vector<StageRecord> stages;

  std::size_t history_size() const;
  /// Chosen subset per stage.
  std::vector<std::vector<std::size_t>> chain() const;
};

/// Test accuracy (decision score >= 0 predicts fraud) and test AUC of a QSVM
/// trained on the given feature columns. Deterministic for a fixed config.
SubsetScore evaluate_subset(const QfisConfig& cfg, const Problem& prob, std::span<const std::size_t> features);

/// All C(m, p0) subsets in lexicographic order; ties on the objective go to
/// the lexicographically smallest set.
SelectionState select_initial_triples(const QfisConfig& cfg, const Problem& prob);

/// One greedy stage: tries selected ∪ {f} for every unselected f, appends
/// the best (ties → lowest f).
SelectionState extend_greedy(const QfisConfig& cfg, const Problem& prob, SelectionState state);

/// Initial stage then greedy stages until target_size.
SelectionState run_qfis(const QfisConfig& cfg, const Problem& prob);

struct MapComparison {
  std::string label;
  fmap::FeatureMapSpec spec;
  SelectionState state;
};

/// Runs QFIS once per map spec, all other settings taken from `base`.
std::vector<MapComparison> compare_maps(const QfisConfig& base, const std::vector<fmap::FeatureMapSpec>& specs,
                                        const Problem& prob);

/// Z d1, Z d2, ZZ d1, ZZ d2 with the alpha and entanglement of `like`.
std::vector<fmap::FeatureMapSpec> standard_maps(const fmap::FeatureMapSpec& like);

double objective_value(const SubsetScore& s, Objective o);

/// stage,feature_set,accuracy,auc with feature sets joined by ';'.
std::string history_csv(const SelectionState& state, std::span<const std::string> names = {});
nlohmann::json selection_json(const SelectionState& state, std::span<const std::string> names = {});

}  // namespace qkf::qfis
