// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkf/classical.hpp"
#include "qkf/feature_map.hpp"
#include "qkf/matrix.hpp"
#include "qkf/quantum_kernel.hpp"
#include "qkf/svm.hpp"

namespace qkf::ensemble {

/// Rows where the two bases fall on different sides of the threshold.
struct DisagreementSet {
  std::vector<std::size_t> rows;  // indices into the scored sample
  std::vector<int> labels;
  std::vector<double> q_scores;
  std::vector<double> c_scores;
  std::vector<int> quantum_correct;  // 1 when the quantum base had the label right

  std::size_t size() const noexcept { return rows.size(); }
};

/// q >= threshold and c >= threshold disagree. Exactly one base is right on
/// every returned row.
DisagreementSet find_disagreements(std::span<const double> q_scores, std::span<const double> c_scores,
                                   std::span<const int> labels, double threshold = 0.5);

enum class MetaKind { kPreferQuantum, kPreferClassical, kConstantLabel, kLogistic, kSvm };
enum class MetaChoice { kAuto, kLogistic, kSvm };

std::string to_string(MetaKind k);
MetaKind meta_kind_from_string(const std::string& s);
std::string to_string(MetaChoice c);
MetaChoice meta_choice_from_string(const std::string& s);

/// Predicts the true label of a disagreement row from its meta inputs.
/// The constant kinds ignore the inputs: kPreferQuantum/kPreferClassical
/// return that base's label, kConstantLabel returns `constant_label`.
struct MetaModel {
  MetaKind kind = MetaKind::kPreferClassical;
  int constant_label = 0;
  classical::LogisticModel logistic;
  svm::SvmModel svm;
  svm::ClassicalKernelSpec kernel;
  /// Validation accuracies when the kind was chosen automatically (-1: not run).
  double validation_logistic = -1.0;
  double validation_svm = -1.0;
  std::string note;

  int predict(std::span<const double> inputs, int q_label, int c_label) const;
};

void to_json(nlohmann::json& j, const MetaModel& m);
void from_json(const nlohmann::json& j, MetaModel& m);

struct MetaOptions {
  MetaChoice choice = MetaChoice::kAuto;
  /// Auto mode uses logistic below this many disagreement rows.
  std::size_t min_rows_for_validation = 50;
  double validation_fraction = 0.3;
  double l2 = 1e-2;
  double svm_C = 1.0;
  std::uint64_t seed = 0;
};

/// `inputs` has one row per disagreement (meta feature plan applied).
/// Empty set: prefer the classical base. One base always right: prefer it.
/// Single true-label class: constant label.
MetaModel train_meta(const DisagreementSet& dis, const Matrix& inputs, const MetaOptions& opts = {});

/// Squashes SVM decision values to (0,1) with 0 ↦ 0.5: 1/(1+exp(−f/scale)).
double squash(double f, double scale);

struct EnsembleSpec {
  fmap::FeatureMapSpec map;
  qkernel::KernelEvalMode mode;
  double C = 1.0;
  classical::ModelKind classical_kind = classical::ModelKind::kGbt;
  nlohmann::json classical_params = nlohmann::json::object();
  double threshold = 0.5;
  /// Disagreements are found on out-of-fold base scores over this many
  /// folds; 0 uses in-sample scores of the final bases.
  std::size_t oof_folds = 3;
  MetaOptions meta;
};

void to_json(nlohmann::json& j, const EnsembleSpec& s);
void from_json(const nlohmann::json& j, EnsembleSpec& s);

struct EnsembleModel {
  fmap::FeatureMapSpec map;
  qkernel::KernelEvalMode mode;
  std::vector<std::size_t> quantum_features;
  svm::SvmModel quantum;  // support_vectors hold the quantum_features columns
  double quantum_scale = 1.0;
  std::vector<std::size_t> classical_features;
  classical::AnyModel classical;
  std::vector<std::size_t> meta_features;  // sorted union of both subsets
  MetaModel meta;
  double threshold = 0.5;
  std::size_t train_rows = 0;
  std::size_t train_disagreements = 0;
};

nlohmann::json to_json(const EnsembleModel& m);
EnsembleModel ensemble_from_json(const nlohmann::json& j);

/// Trains both bases on the full training table and the meta model on
/// training disagreements. Features are column indices of `x`.
EnsembleModel train_ensemble(const EnsembleSpec& spec, const Matrix& x, std::span<const int> labels,
                             std::span<const std::size_t> quantum_features,
                             std::span<const std::size_t> classical_features);

struct BaseScores {
  std::vector<double> quantum;    // squashed to (0,1)
  std::vector<double> classical;  // class-1 probability
};

BaseScores base_scores(const EnsembleModel& model, const Matrix& x);

/// Meta inputs: the meta_features columns, then the quantum and classical scores.
Matrix meta_inputs(const Matrix& x, std::span<const std::size_t> meta_features, std::span<const double> q,
                   std::span<const double> c, std::span<const std::size_t> rows);

enum class Provenance { kAgreed, kMetaResolved };

struct EnsemblePrediction {
  std::vector<int> labels;
  std::vector<Provenance> provenance;
  BaseScores scores;
  std::size_t n_agreed() const;
  std::size_t n_meta_resolved() const;
};

EnsemblePrediction predict_ensemble(const EnsembleModel& model, const Matrix& x);

/// Routes given base scores: agreement → the common label, else the meta's label.
EnsemblePrediction route(const EnsembleModel& model, const Matrix& x, BaseScores scores);

struct ScatterPoint {
  double c_score = 0.0;
  double q_score = 0.0;
  int label = 0;
};

/// Quadrant tallies; "q" and "c" mark which base flags the row.
struct Quadrants {
  std::size_t both = 0, neither = 0, q_only = 0, c_only = 0;
  std::size_t disagreements() const noexcept { return q_only + c_only; }
};

struct Scatter {
  std::vector<ScatterPoint> points;
  Quadrants quadrants;
};

Scatter complementarity_scatter(std::span<const double> q_scores, std::span<const double> c_scores,
                                std::span<const int> labels, double threshold = 0.5);

}  // namespace qkf::ensemble
