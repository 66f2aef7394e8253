// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qkf/matrix.hpp"

namespace qkf {

enum class FeatureKind { kNumeric, kCategorical };

/// Numeric features hold a finite double, categorical ones a text code.
using FeatureValue = std::variant<double, std::string>;

struct FeatureRow {
  std::vector<FeatureValue> values;
  bool operator==(const FeatureRow&) const = default;
};

/// Labeled transaction table. Label 0 is genuine, 1 is fraud.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> feature_kinds;
  std::vector<FeatureRow> rows;
  std::vector<int> labels;
  std::vector<double> amounts;
  std::vector<std::int64_t> timestamps;

  std::size_t size() const noexcept { return rows.size(); }
  std::size_t n_features() const noexcept { return feature_names.size(); }
  std::size_t count_label(int label) const;

  /// Throws Error(kSchema) when any structural invariant is broken.
  void validate() const;

  /// Index of a feature by name; throws Error(kSchema) when absent.
  std::size_t feature_index(const std::string& name) const;

  bool all_numeric() const;

  /// n × m matrix of numeric values. Requires all_numeric().
  Matrix numeric_matrix() const;

  /// Rows in the given order, all columns kept.
  Dataset subset(const std::vector<std::size_t>& idx) const;

  bool operator==(const Dataset&) const = default;
};

/// Column roles of a CSV file. JSON sidecar layout:
/// {"label": <col>, "amount": <col>, "timestamp": <col>, "categorical": [<cols>]}
struct CsvSchema {
  std::string label = "label";
  std::string amount = "amount";
  std::string timestamp = "timestamp";
  std::vector<std::string> categorical;
};

void to_json(nlohmann::json& j, const CsvSchema& s);
void from_json(const nlohmann::json& j, CsvSchema& s);

CsvSchema load_schema(const std::filesystem::path& path);

/// Comma-separated, header row, RFC 4180 quoting. Parse failures carry the
/// 1-based line number of the offending record.
Dataset read_csv(std::istream& in, const CsvSchema& schema);
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes features, then label, amount and timestamp columns under the
/// schema's names. Reals use shortest round-trip formatting so
/// write_csv/load_csv is lossless.
void write_csv(std::ostream& out, const Dataset& data, const CsvSchema& schema = {});
void write_csv(const std::filesystem::path& path, const Dataset& data, const CsvSchema& schema = {});

/// Schema matching what write_csv emits for this dataset.
CsvSchema schema_for(const Dataset& data);

/// Content fingerprint (FNV-1a over the canonical CSV form).
std::uint64_t dataset_hash(const Dataset& data);

/// Synthetic payment-transaction generator settings.
struct SyntheticConfig {
  std::size_t n_genuine = 7450;
  std::size_t n_fraud = 10;
  std::size_t n_numeric = 8;
  std::size_t n_categorical = 1;
  std::size_t n_informative_single = 2;
  std::size_t n_informative_pair = 1;
  double noise_sd = 0.3;
  std::uint64_t seed = 1;
  /// Class mean gap of informative single features (in units of their sd).
  double single_shift = 1.0;
  /// Coefficient of x_i·x_j in the label log-odds of each informative pair.
  double pair_strength = 3.0;
  /// Distinct codes per categorical column.
  std::size_t n_categories = 8;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);

/// Where the generator planted class signal (numeric feature indices).
struct PlantedStructure {
  std::vector<std::size_t> single;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct SyntheticData {
  Dataset data;
  PlantedStructure planted;
};

/// Generation scheme, per accepted row:
///  1. every pair (a, b) draws z_a, z_b ~ N(0,1); the label is Bernoulli with
///     log-odds pair_strength·Σ z_a·z_b; a row whose class quota is already
///     filled is rejected and redrawn;
///  2. informative single features draw N(±single_shift/2, 1) by class;
///     other numeric features draw N(0, 1); noise_sd·N(0,1) is added to all;
///  3. fraud picks categorical codes from a geometric(1/2) law over the codes,
///     genuine picks uniformly; amounts are log-normal, heavier for fraud.
/// Rows are then shuffled and given strictly increasing timestamps.
/// All randomness comes from one Rng seeded with cfg.seed.
SyntheticData generate_synthetic_planted(const SyntheticConfig& cfg);
Dataset generate_synthetic(const SyntheticConfig& cfg);

}  // namespace qkf
