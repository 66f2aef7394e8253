// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkf/classical.hpp"
#include "qkf/error.hpp"
#include "qkf/parallel.hpp"
#include "qkf/rng.hpp"

namespace qkf::classical {

namespace {

void check_training_input(const Matrix& X, std::span<const int> labels) {
  require(X.rows() > 0 && X.cols() > 0, ErrorKind::kInvalidArgument, "training data is empty");
  require(labels.size() == X.rows(), ErrorKind::kDimension, "label count does not match row count");
  for (int y : labels) require(y == 0 || y == 1, ErrorKind::kInvalidArgument, "labels must be 0 or 1");
}

bool both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int y : labels) (y == 1 ? pos : neg) = true;
  return pos && neg;
}

void add_gain(const TreeModel& t, std::vector<double>& acc) {
  for (const auto& n : t.nodes)
    if (n.feature >= 0) acc[static_cast<std::size_t>(n.feature)] += n.gain;
}

void normalize(std::vector<double>& v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s > 0.0)
    for (double& x : v) x /= s;
}

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

std::vector<int> labels_of(const Dataset& d) { return {d.labels.begin(), d.labels.end()}; }

}  // namespace

// ------------------------------------------------------------------ forest

void to_json(nlohmann::json& j, const ForestParams& p) {
  j = nlohmann::json{{"n_estimators", p.n_estimators},         {"max_depth", p.max_depth},
                     {"min_samples_split", p.min_samples_split}, {"min_samples_leaf", p.min_samples_leaf},
                     {"max_features", p.max_features},           {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, ForestParams& p) {
  static const std::vector<std::string> keys{"n_estimators",     "max_depth",    "min_samples_split",
                                             "min_samples_leaf", "max_features", "seed"};
  for (const auto& [k, v] : j.items())
    require(std::find(keys.begin(), keys.end(), k) != keys.end(), ErrorKind::kSchema, "unknown forest key: " + k);
  p = ForestParams{};
  p.n_estimators = j.value("n_estimators", p.n_estimators);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  p.max_features = j.value("max_features", p.max_features);
  p.seed = j.value("seed", p.seed);
  require(p.n_estimators >= 1, ErrorKind::kInvalidArgument, "forest needs n_estimators >= 1");
  require(p.max_features >= 0.0 && p.max_features <= 1.0, ErrorKind::kInvalidArgument,
          "forest max_features must be a fraction in [0, 1]");
}

void to_json(nlohmann::json& j, const ForestModel& m) {
  j = nlohmann::json{{"params", m.params}, {"tree_seeds", m.tree_seeds}, {"importance", m.importance},
                     {"trees", m.trees}};
}

void from_json(const nlohmann::json& j, ForestModel& m) {
  m.params = j.at("params").get<ForestParams>();
  m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
  m.importance = j.at("importance").get<std::vector<double>>();
  m.trees = j.at("trees").get<std::vector<TreeModel>>();
}

ForestModel train_forest(const Matrix& X, std::span<const int> labels, const ForestParams& params) {
  check_training_input(X, labels);
  require(params.n_estimators >= 1, ErrorKind::kInvalidArgument, "forest needs n_estimators >= 1");
  const std::size_t n = X.rows(), m = X.cols();
  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_split = params.min_samples_split;
  tp.min_samples_leaf = params.min_samples_leaf;
  const double frac = params.max_features > 0.0 ? params.max_features * static_cast<double>(m)
                                                : std::sqrt(static_cast<double>(m));
  tp.max_features = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(frac)), 1, m);

  ForestModel model;
  model.params = params;
  model.trees.resize(params.n_estimators);
  model.tree_seeds.resize(params.n_estimators);
  for (std::size_t t = 0; t < params.n_estimators; ++t) model.tree_seeds[t] = derive_seed(params.seed, t);
  parallel_for(params.n_estimators, [&](std::size_t t) {
    Rng rng(model.tree_seeds[t]);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    model.trees[t] = fit_classification_tree(X, labels, rows, tp, rng.next());
  });
  model.importance.assign(m, 0.0);
  for (const auto& t : model.trees) add_gain(t, model.importance);
  normalize(model.importance);
  return model;
}

ForestModel train_forest(const Dataset& data, const ForestParams& params) {
  const auto y = labels_of(data);
  return train_forest(data.numeric_matrix(), y, params);
}

std::vector<double> predict_forest(const ForestModel& model, const Matrix& X) {
  require(!model.trees.empty(), ErrorKind::kInvalidArgument, "forest has no trees");
  std::vector<double> out(X.rows(), 0.0);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double s = 0.0;
    for (const auto& t : model.trees) s += t.predict(X.row(r));
    out[r] = s / static_cast<double>(model.trees.size());
  }
  return out;
}

// ------------------------------------------------------------------ boosting

void to_json(nlohmann::json& j, const GbtParams& p) {
  j = nlohmann::json{{"n_estimators", p.n_estimators},
                     {"learning_rate", p.learning_rate},
                     {"max_depth", p.max_depth},
                     {"min_child_weight", p.min_child_weight},
                     {"min_samples_leaf", p.min_samples_leaf}};
}

void from_json(const nlohmann::json& j, GbtParams& p) {
  static const std::vector<std::string> keys{"n_estimators", "learning_rate", "max_depth", "min_child_weight",
                                             "min_samples_leaf"};
  for (const auto& [k, v] : j.items())
    require(std::find(keys.begin(), keys.end(), k) != keys.end(), ErrorKind::kSchema, "unknown gbt key: " + k);
  p = GbtParams{};
  p.n_estimators = j.value("n_estimators", p.n_estimators);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
  p.min_samples_leaf = j.value("min_samples_leaf", p.min_samples_leaf);
  require(p.learning_rate > 0.0 && p.learning_rate <= 1.0, ErrorKind::kInvalidArgument,
          "gbt learning_rate must be in (0, 1]");
}

void to_json(nlohmann::json& j, const GbtModel& m) {
  j = nlohmann::json{{"params", m.params},
                     {"init_logodds", m.init_logodds},
                     {"train_logloss", m.train_logloss},
                     {"importance", m.importance},
                     {"trees", m.trees}};
}

void from_json(const nlohmann::json& j, GbtModel& m) {
  m.params = j.at("params").get<GbtParams>();
  m.init_logodds = j.at("init_logodds").get<double>();
  m.train_logloss = j.value("train_logloss", std::vector<double>{});
  m.importance = j.at("importance").get<std::vector<double>>();
  m.trees = j.at("trees").get<std::vector<TreeModel>>();
}

GbtModel train_gbt(const Matrix& X, std::span<const int> labels, const GbtParams& params) {
  check_training_input(X, labels);
  require(both_classes(labels), ErrorKind::kInvalidArgument, "gbt training labels contain a single class");
  require(params.learning_rate > 0.0 && params.learning_rate <= 1.0, ErrorKind::kInvalidArgument,
          "gbt learning_rate must be in (0, 1]");
  const std::size_t n = X.rows();
  GbtModel model;
  model.params = params;
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  model.init_logodds = std::log(pos / (static_cast<double>(n) - pos));

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_samples_leaf = params.min_samples_leaf;
  tp.min_child_weight = params.min_child_weight;

  std::vector<double> F(n, model.init_logodds), resid(n), hess(n), p(n);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  auto refresh = [&] {
    for (std::size_t i = 0; i < n; ++i) p[i] = sigmoid(F[i]);
    model.train_logloss.push_back(log_loss(labels, p));
  };
  refresh();
  model.importance.assign(X.cols(), 0.0);
  for (std::size_t t = 0; t < params.n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = static_cast<double>(labels[i]) - p[i];
      hess[i] = p[i] * (1.0 - p[i]);
    }
    TreeModel tree = fit_regression_tree(X, resid, hess, rows, tp);
    for (std::size_t i = 0; i < n; ++i) F[i] += params.learning_rate * tree.predict(X.row(i));
    add_gain(tree, model.importance);
    model.trees.push_back(std::move(tree));
    refresh();
  }
  normalize(model.importance);
  return model;
}

GbtModel train_gbt(const Dataset& data, const GbtParams& params) {
  const auto y = labels_of(data);
  return train_gbt(data.numeric_matrix(), y, params);
}

std::vector<double> predict_gbt(const GbtModel& model, const Matrix& X) {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double f = model.init_logodds;
    for (const auto& t : model.trees) f += model.params.learning_rate * t.predict(X.row(r));
    out[r] = sigmoid(f);
  }
  return out;
}

double log_loss(std::span<const int> labels, std::span<const double> probs) {
  require(labels.size() == probs.size() && !labels.empty(), ErrorKind::kDimension, "log_loss: size mismatch");
  constexpr double kEps = 1e-15;
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = std::clamp(probs[i], kEps, 1.0 - kEps);
    s -= labels[i] == 1 ? std::log(q) : std::log1p(-q);
  }
  return s / static_cast<double>(labels.size());
}

}  // namespace qkf::classical
