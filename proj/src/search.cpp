// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "qkf/classical.hpp"
#include "qkf/error.hpp"
#include "qkf/metrics.hpp"
#include "qkf/parallel.hpp"
#include "qkf/rng.hpp"

namespace qkf::classical {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kForest: return "forest";
    case ModelKind::kGbt: return "gbt";
    case ModelKind::kLogistic: return "logistic";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "forest") return ModelKind::kForest;
  if (s == "gbt") return ModelKind::kGbt;
  if (s == "logistic") return ModelKind::kLogistic;
  fail(ErrorKind::kSchema, "model kind must be forest, gbt or logistic, got '" + s + "'");
}

namespace {

double logistic_l2(const nlohmann::json& params) {
  for (const auto& [k, v] : params.items())
    require(k == "l2", ErrorKind::kSchema, "unknown logistic key: " + k);
  return params.value("l2", 1e-3);
}

}  // namespace

AnyModel fit(ModelKind kind, const nlohmann::json& params, const Matrix& X, std::span<const int> labels) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  switch (kind) {
    case ModelKind::kForest: return train_forest(X, labels, p.get<ForestParams>());
    case ModelKind::kGbt: return train_gbt(X, labels, p.get<GbtParams>());
    case ModelKind::kLogistic: return train_logistic(X, labels, logistic_l2(p));
  }
  fail(ErrorKind::kInvalidArgument, "unknown model kind");
}

std::vector<double> predict(const AnyModel& model, const Matrix& X) {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ForestModel>) return predict_forest(m, X);
        else if constexpr (std::is_same_v<T, GbtModel>) return predict_gbt(m, X);
        else return predict_logistic(m, X);
      },
      model);
}

std::vector<double> feature_importance(const AnyModel& model) {
  if (const auto* f = std::get_if<ForestModel>(&model)) return f->importance;
  if (const auto* g = std::get_if<GbtModel>(&model)) return g->importance;
  return {};
}

void to_json(nlohmann::json& j, const AnyModel& m) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        const ModelKind k = std::is_same_v<T, ForestModel> ? ModelKind::kForest
                            : std::is_same_v<T, GbtModel>  ? ModelKind::kGbt
                                                           : ModelKind::kLogistic;
        j = nlohmann::json{{"kind", to_string(k)}, {"model", v}};
      },
      m);
}

AnyModel any_model_from_json(const nlohmann::json& j) {
  switch (model_kind_from_string(j.at("kind").get<std::string>())) {
    case ModelKind::kForest: return j.at("model").get<ForestModel>();
    case ModelKind::kGbt: return j.at("model").get<GbtModel>();
    case ModelKind::kLogistic: return j.at("model").get<LogisticModel>();
  }
  fail(ErrorKind::kSchema, "unknown model kind");
}

void SearchSpec::validate() const {
  require(k_folds >= 2, ErrorKind::kInvalidArgument, "search needs k_folds >= 2");
  require(n_candidates >= 1, ErrorKind::kInvalidArgument, "search needs n_candidates >= 1");
}

std::vector<nlohmann::json> sample_candidates(ModelKind kind, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5ea7c4));
  auto pick = [&](const auto& options) { return options[static_cast<std::size_t>(rng.below(options.size()))]; };
  std::vector<nlohmann::json> out;
  for (std::size_t c = 0; c < n; ++c) {
    nlohmann::json p;
    switch (kind) {
      case ModelKind::kForest: {
        ForestParams fp;
        fp.seed = seed;
        if (c > 0) {
          fp.n_estimators = pick(std::vector<std::size_t>{50, 100, 200, 300});
          fp.max_depth = pick(std::vector<std::size_t>{3, 4, 6, 8, 10, 12});
          fp.min_samples_leaf = pick(std::vector<std::size_t>{1, 2, 4, 8});
          fp.max_features = pick(std::vector<double>{0.0, 0.3, 0.5, 0.7, 1.0});
        }
        p = fp;
        break;
      }
      case ModelKind::kGbt: {
        GbtParams gp;
        if (c > 0) {
          gp.n_estimators = pick(std::vector<std::size_t>{50, 100, 200, 300});
          gp.learning_rate = pick(std::vector<double>{0.03, 0.05, 0.1, 0.2, 0.3});
          gp.max_depth = pick(std::vector<std::size_t>{2, 3, 4, 5, 6});
          gp.min_child_weight = pick(std::vector<double>{0.5, 1.0, 2.0, 5.0});
        }
        p = gp;
        break;
      }
      case ModelKind::kLogistic: {
        const double l2 = c == 0 ? 1e-3 : std::pow(10.0, -4.0 + 5.0 * rng.uniform());
        p = nlohmann::json{{"l2", l2}};
        break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

SearchResult grid_search(const Matrix& X, std::span<const int> labels, ModelKind kind,
                         const std::vector<nlohmann::json>& candidates, const SearchSpec& spec) {
  spec.validate();
  require(!candidates.empty(), ErrorKind::kInvalidArgument, "search needs at least one candidate");
  require(labels.size() == X.rows(), ErrorKind::kDimension, "label count does not match row count");

  // Stratified fold assignment: each class is shuffled and dealt round-robin.
  std::vector<std::size_t> fold(X.rows());
  Rng rng(derive_seed(spec.seed, 0xf01d));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    require(idx.size() >= spec.k_folds, ErrorKind::kInvalidArgument,
            "each class needs at least k_folds rows for cross-validation");
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % spec.k_folds;
  }

  const std::size_t n_cand = candidates.size(), k = spec.k_folds;
  std::vector<double> scores(n_cand * k);
  parallel_for(n_cand * k, [&](std::size_t job) {
    const std::size_t c = job / k, f = job % k;
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    const Matrix Xtr = X.select_rows(tr), Xte = X.select_rows(te);
    std::vector<int> ytr, yte;
    for (auto i : tr) ytr.push_back(labels[i]);
    for (auto i : te) yte.push_back(labels[i]);
    const AnyModel m = fit(kind, candidates[c], Xtr, ytr);
    const auto s = predict(m, Xte);
    scores[job] = spec.objective == Objective::kAuc ? metrics::auc(yte, s)
                                                    : metrics::accuracy(yte, metrics::threshold_labels(s, 0.5));
  });

  SearchResult res;
  res.best_score = -1.0;
  for (std::size_t c = 0; c < n_cand; ++c) {
    SearchRow row;
    row.params = candidates[c];
    row.fold_scores.assign(scores.begin() + static_cast<std::ptrdiff_t>(c * k),
                           scores.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
    double s = 0.0;
    for (double v : row.fold_scores) s += v;
    row.mean_score = s / static_cast<double>(k);
    if (row.mean_score > res.best_score) {
      res.best_score = row.mean_score;
      res.best_params = row.params;
    }
    res.table.push_back(std::move(row));
  }
  return res;
}

SearchResult randomized_search(const Matrix& X, std::span<const int> labels, ModelKind kind, const SearchSpec& spec) {
  spec.validate();
  return grid_search(X, labels, kind, sample_candidates(kind, spec.n_candidates, spec.seed), spec);
}

}  // namespace qkf::classical
