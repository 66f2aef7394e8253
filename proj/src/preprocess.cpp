// SPDX-License-Identifier: Apache-2.0
#include "qkf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qkf/error.hpp"
#include "qkf/rng.hpp"

namespace qkf {

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kDimension, "pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<double> numeric_column(const Dataset& data, std::size_t j) {
  std::vector<double> col(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) col[i] = std::get<double>(data.rows[i].values[j]);
  return col;
}

Dataset keep_columns(const Dataset& data, const std::vector<std::size_t>& keep) {
  Dataset out;
  for (std::size_t j : keep) {
    out.feature_names.push_back(data.feature_names[j]);
    out.feature_kinds.push_back(data.feature_kinds[j]);
  }
  out.rows.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.rows[i].values.reserve(keep.size());
    for (std::size_t j : keep) out.rows[i].values.push_back(data.rows[i].values[j]);
  }
  out.labels = data.labels;
  out.amounts = data.amounts;
  out.timestamps = data.timestamps;
  return out;
}

}  // namespace

PruneResult prune_correlated(const Dataset& data, double threshold) {
  require(threshold > 0.0 && threshold <= 1.0, ErrorKind::kInvalidArgument, "threshold must be in (0, 1]");
  std::vector<std::size_t> keep;
  std::vector<std::vector<double>> kept_cols;
  PruneResult result;
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    if (data.feature_kinds[j] != FeatureKind::kNumeric) {
      keep.push_back(j);
      continue;
    }
    auto col = numeric_column(data, j);
    bool ok = true;
    for (const auto& other : kept_cols) {
      if (std::abs(pearson(other, col)) >= threshold) {
        ok = false;
        break;
      }
    }
    if (ok) {
      keep.push_back(j);
      kept_cols.push_back(std::move(col));
    } else {
      result.removed.push_back(data.feature_names[j]);
    }
  }
  result.data = keep_columns(data, keep);
  return result;
}

void to_json(nlohmann::json& j, const CategoryEncoding& e) {
  j = nlohmann::json::array();
  for (const auto& c : e.columns) j.push_back({{"column", c.name}, {"top_codes", c.top_codes}});
}

void from_json(const nlohmann::json& j, CategoryEncoding& e) {
  e.columns.clear();
  for (const auto& c : j) e.columns.push_back({c.at("column").get<std::string>(), c.at("top_codes").get<std::vector<std::string>>()});
}

CategoryEncoding fit_top_categories(const Dataset& data, std::size_t k) {
  require(k >= 1, ErrorKind::kInvalidArgument, "k must be >= 1");
  CategoryEncoding enc;
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    if (data.feature_kinds[j] != FeatureKind::kCategorical) continue;
    std::map<std::string, std::size_t> fraud;  // every seen code, fraud count
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto& cnt = fraud[std::get<std::string>(data.rows[i].values[j])];
      if (data.labels[i] == 1) ++cnt;
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(fraud.begin(), fraud.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    CategoryEncoding::Column col{data.feature_names[j], {}};
    for (std::size_t r = 0; r < ranked.size() && r < k; ++r) col.top_codes.push_back(ranked[r].first);
    enc.columns.push_back(std::move(col));
  }
  return enc;
}

Dataset apply_category_encoding(const CategoryEncoding& enc, const Dataset& data) {
  std::map<std::string, const CategoryEncoding::Column*> by_name;
  for (const auto& c : enc.columns) by_name[c.name] = &c;

  Dataset out;
  out.labels = data.labels;
  out.amounts = data.amounts;
  out.timestamps = data.timestamps;
  out.rows.resize(data.size());
  for (std::size_t j = 0; j < data.n_features(); ++j) {
    if (data.feature_kinds[j] == FeatureKind::kNumeric) {
      out.feature_names.push_back(data.feature_names[j]);
      out.feature_kinds.push_back(FeatureKind::kNumeric);
      for (std::size_t i = 0; i < data.size(); ++i) out.rows[i].values.push_back(data.rows[i].values[j]);
      continue;
    }
    auto it = by_name.find(data.feature_names[j]);
    require(it != by_name.end(), ErrorKind::kSchema, "no encoding for categorical column " + data.feature_names[j]);
    for (const auto& code : it->second->top_codes) {
      out.feature_names.push_back(data.feature_names[j] + "=" + code);
      out.feature_kinds.push_back(FeatureKind::kNumeric);
      for (std::size_t i = 0; i < data.size(); ++i)
        out.rows[i].values.emplace_back(std::get<std::string>(data.rows[i].values[j]) == code ? 1.0 : 0.0);
    }
  }
  return out;
}

Dataset encode_top_categories(const Dataset& data, std::size_t k) {
  return apply_category_encoding(fit_top_categories(data, k), data);
}

void SplitSpec::validate() const {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::kInvalidArgument,
          "train_fraction must be in (0, 1)");
}

TrainTest split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (spec.mode == SplitMode::kChronological) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.timestamps[a] < data.timestamps[b]; });
  } else {
    Rng rng(spec.seed);
    rng.shuffle(order);
  }
  const auto cut = static_cast<std::size_t>(std::llround(static_cast<double>(data.size()) * spec.train_fraction));
  std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  return {data.subset(tr), data.subset(te)};
}

std::vector<Dataset> undersample_trials(const Dataset& data, std::size_t target_genuine, std::size_t target_fraud,
                                        std::size_t n_trials, std::uint64_t seed) {
  std::vector<std::size_t> genuine, fraud;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] == 1 ? fraud : genuine).push_back(i);
  require(target_genuine <= genuine.size(), ErrorKind::kInvalidArgument,
          "target_genuine " + std::to_string(target_genuine) + " exceeds " + std::to_string(genuine.size()) +
              " available genuine rows");
  require(target_fraud <= fraud.size(), ErrorKind::kInvalidArgument,
          "target_fraud " + std::to_string(target_fraud) + " exceeds " + std::to_string(fraud.size()) +
              " available fraud rows");
  std::vector<Dataset> trials;
  trials.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) {
    Rng rng(seed + t);
    std::vector<std::size_t> pick;
    for (std::size_t k : sample_without_replacement(rng, genuine.size(), target_genuine)) pick.push_back(genuine[k]);
    for (std::size_t k : sample_without_replacement(rng, fraud.size(), target_fraud)) pick.push_back(fraud[k]);
    std::sort(pick.begin(), pick.end());
    trials.push_back(data.subset(pick));
  }
  return trials;
}

void to_json(nlohmann::json& j, const ScalerParams& p) {
  j = nlohmann::json{{"min", p.min}, {"max", p.max}, {"lo", p.lo}, {"hi", p.hi}};
}

void from_json(const nlohmann::json& j, ScalerParams& p) {
  p.min = j.at("min").get<std::vector<double>>();
  p.max = j.at("max").get<std::vector<double>>();
  p.lo = j.at("lo").get<double>();
  p.hi = j.at("hi").get<double>();
  require(p.min.size() == p.max.size(), ErrorKind::kSchema, "scaler min/max lengths differ");
}

ScalerParams fit_scaler(const Matrix& train, double lo, double hi) {
  require(hi > lo, ErrorKind::kInvalidArgument, "scaler interval must have hi > lo");
  require(train.rows() > 0, ErrorKind::kInvalidArgument, "cannot fit scaler on empty data");
  ScalerParams p;
  p.lo = lo;
  p.hi = hi;
  p.min.assign(train.cols(), 0.0);
  p.max.assign(train.cols(), 0.0);
  for (std::size_t j = 0; j < train.cols(); ++j) {
    double mn = train(0, j), mx = train(0, j);
    for (std::size_t i = 1; i < train.rows(); ++i) {
      mn = std::min(mn, train(i, j));
      mx = std::max(mx, train(i, j));
    }
    p.min[j] = mn;
    p.max[j] = mx;
  }
  return p;
}

ScalerParams fit_scaler(const Dataset& train, double lo, double hi) {
  return fit_scaler(train.numeric_matrix(), lo, hi);
}

Matrix apply_scaler(const ScalerParams& params, const Matrix& data) {
  require(data.cols() == params.min.size(), ErrorKind::kDimension, "scaler feature count mismatch");
  Matrix out(data.rows(), data.cols());
  const double mid = 0.5 * (params.lo + params.hi);
  for (std::size_t j = 0; j < data.cols(); ++j) {
    const double span = params.max[j] - params.min[j];
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (span <= 0.0) {
        out(i, j) = mid;
      } else {
        const double t = (data(i, j) - params.min[j]) / span;
        out(i, j) = std::clamp(params.lo + t * (params.hi - params.lo), params.lo, params.hi);
      }
    }
  }
  return out;
}

Dataset apply_scaler(const ScalerParams& params, const Dataset& data) {
  Matrix m = apply_scaler(params, data.numeric_matrix());
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.n_features(); ++j) out.rows[i].values[j] = m(i, j);
  return out;
}

}  // namespace qkf
