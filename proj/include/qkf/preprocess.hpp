// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkf/dataset.hpp"

namespace qkf {

/// Pearson correlation. A constant column has correlation 0 with anything.
double pearson(std::span<const double> a, std::span<const double> b);

struct PruneResult {
  Dataset data;
  std::vector<std::string> removed;
};

/// Drops numeric features that correlate with an earlier retained numeric
/// feature at |rho| >= threshold. Scanning in column order, a feature is kept
/// only if it stays strictly below the threshold against every kept one, so
/// of a violating pair the higher index goes. Categorical columns pass
/// through. Idempotent.
PruneResult prune_correlated(const Dataset& data, double threshold = 0.95);

/// Per categorical column, the codes with the most fraud rows (ties by code).
struct CategoryEncoding {
  struct Column {
    std::string name;
    std::vector<std::string> top_codes;
  };
  std::vector<Column> columns;
};

void to_json(nlohmann::json& j, const CategoryEncoding& e);
void from_json(const nlohmann::json& j, CategoryEncoding& e);

CategoryEncoding fit_top_categories(const Dataset& data, std::size_t k = 3);

/// Replaces each categorical column by one 0/1 indicator "col=code" per top
/// code, in place of the original column. Unlisted codes encode as all zeros.
Dataset apply_category_encoding(const CategoryEncoding& enc, const Dataset& data);

/// fit_top_categories followed by apply_category_encoding on the same data.
Dataset encode_top_categories(const Dataset& data, std::size_t k = 3);

enum class SplitMode { kChronological, kRandom };

struct SplitSpec {
  SplitMode mode = SplitMode::kChronological;
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
  void validate() const;
};

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Chronological: stable sort by timestamp, first round(n·fraction) rows
/// train. Random: seeded shuffle, then the same cut.
TrainTest split(const Dataset& data, const SplitSpec& spec);

/// n_trials balanced draws without replacement; trial t uses seed + t.
/// Rows keep their relative order from `data`.
std::vector<Dataset> undersample_trials(const Dataset& data, std::size_t target_genuine, std::size_t target_fraud,
                                        std::size_t n_trials, std::uint64_t seed);

/// Per-feature min/max learned on training data, mapped onto [lo, hi].
struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
  double lo = -1.0;
  double hi = 1.0;
};

void to_json(nlohmann::json& j, const ScalerParams& p);
void from_json(const nlohmann::json& j, ScalerParams& p);

ScalerParams fit_scaler(const Matrix& train, double lo = -1.0, double hi = 1.0);
ScalerParams fit_scaler(const Dataset& train, double lo = -1.0, double hi = 1.0);

/// Linear map onto [lo, hi], clamped; constant features map to the midpoint.
Matrix apply_scaler(const ScalerParams& params, const Matrix& data);
Dataset apply_scaler(const ScalerParams& params, const Dataset& data);

}  // namespace qkf
