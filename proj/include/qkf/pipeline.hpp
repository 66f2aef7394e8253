// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkf/classical.hpp"
#include "qkf/dataset.hpp"
#include "qkf/ensemble.hpp"
#include "qkf/feature_map.hpp"
#include "qkf/preprocess.hpp"
#include "qkf/qfis.hpp"
#include "qkf/quantum_kernel.hpp"

namespace qkf::pipeline {

struct DataSource {
  std::optional<SyntheticConfig> synthetic;
  std::string csv;  // used when synthetic is empty
  CsvSchema schema;
};

/// Rows kept per class in each trial; unset means every row of that class.
struct UndersampleSpec {
  std::optional<std::size_t> train_genuine, train_fraud, test_genuine, test_fraud;
};

struct PreprocessConfig {
  double correlation_threshold = 0.95;
  std::size_t top_categories = 3;
  SplitSpec split;
  UndersampleSpec undersample;
  double scale_lo = -1.0;
  double scale_hi = 1.0;
};

struct ClassicalConfig {
  classical::ModelKind kind = classical::ModelKind::kGbt;
  nlohmann::json params = nlohmann::json::object();
  /// Randomized search on the selection trial; its best params replace `params`.
  bool search = false;
  classical::SearchSpec search_spec;
};

/// One JSON document describing a whole experiment. Unknown keys anywhere
/// are rejected. The output directory is not part of the hash.
struct ExperimentConfig {
  DataSource data;
  PreprocessConfig preprocess;
  std::vector<fmap::FeatureMapSpec> feature_maps{fmap::FeatureMapSpec{}};
  qfis::QfisConfig qfis;  // feature_map, eval_mode and C come from the fields below
  double C = 1.0;
  qkernel::KernelEvalMode eval_mode;
  ClassicalConfig classical;
  ensemble::EnsembleSpec ensemble;  // feature_map, eval_mode and C come from above
  std::size_t trials = 5;
  std::size_t selection_trial = 0;
  std::uint64_t seed = 1;
  bool kernel_cache = false;
  std::string out = "out";

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// 16 hex digits of FNV-1a over the canonical JSON without "out".
  std::string hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out;
  std::size_t jobs = 0;
};

void cmd_generate(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_preprocess(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_select(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_train(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_evaluate(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_ensemble(const ExperimentConfig& cfg, const RunOptions& opts);
void cmd_report(const ExperimentConfig& cfg, const RunOptions& opts);
/// generate → preprocess → select → train → evaluate → ensemble → report.
void cmd_all(const ExperimentConfig& cfg, const RunOptions& opts);

/// Dispatches by command name; throws Error(kInvalidArgument) on an unknown name.
void run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts);

const std::vector<std::string>& command_names();

}  // namespace qkf::pipeline
