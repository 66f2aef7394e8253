// SPDX-License-Identifier: Apache-2.0
#include "qkf/qfis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "qkf/error.hpp"
#include "qkf/metrics.hpp"
#include "qkf/parallel.hpp"
#include "qkf/rng.hpp"
#include "qkf/svm.hpp"
#include "qkf/text.hpp"

namespace qkf::qfis {

std::string to_string(Objective o) { return o == Objective::kAccuracy ? "accuracy" : "auc"; }

Objective objective_from_string(const std::string& s) {
  if (s == "accuracy") return Objective::kAccuracy;
  if (s == "auc") return Objective::kAuc;
  fail(ErrorKind::kSchema, "objective must be accuracy or auc, got '" + s + "'");
}

void Problem::validate() const {
  require(x_train.rows() == y_train.size() && x_test.rows() == y_test.size(), ErrorKind::kDimension,
          "feature rows and labels differ in length");
  require(x_train.cols() == x_test.cols(), ErrorKind::kDimension, "train and test feature counts differ");
  require(feature_names.empty() || feature_names.size() == x_train.cols(), ErrorKind::kDimension,
          "feature name count does not match columns");
  require(x_train.rows() > 0 && x_test.rows() > 0, ErrorKind::kInvalidArgument, "empty train or test set");
}

namespace {

double n_choose_k(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace

void QfisConfig::validate(std::size_t m) const {
  spec.with_features(std::max<std::size_t>(p0, 1)).validate();
  mode.validate();
  require(p0 >= 1, ErrorKind::kInvalidArgument, "p0 must be >= 1");
  require(p0 <= target_size && target_size <= m, ErrorKind::kInvalidArgument,
          "need p0 <= target_size <= feature count (p0=" + std::to_string(p0) +
              ", target_size=" + std::to_string(target_size) + ", m=" + std::to_string(m) + ")");
  require(target_size <= sim::kMaxQubits, ErrorKind::kCapacity,
          "target_size exceeds the " + std::to_string(sim::kMaxQubits) + "-qubit simulator capacity");
  require(C > 0.0, ErrorKind::kInvalidArgument, "C must be > 0");
  if (closed_form_z)
    require(spec.order == fmap::Order::kZ && spec.depth == 1 && mode.kind == qkernel::EvalKind::kExact,
            ErrorKind::kInvalidArgument, "closed-form Grams need the Z depth-1 map in exact mode");
  const double n_first = n_choose_k(m, p0);
  require(allow_over_budget || n_first <= static_cast<double>(budget_cap), ErrorKind::kInvalidArgument,
          "initial stage needs " + format_double(n_first) + " evaluations, above the budget cap of " +
              std::to_string(budget_cap) + "; raise budget_cap or set allow_over_budget");
}

void to_json(nlohmann::json& j, const QfisConfig& c) {
  j = nlohmann::json{{"feature_map", c.spec},       {"p0", c.p0},
                     {"target_size", c.target_size}, {"objective", to_string(c.objective)},
                     {"C", c.C},                     {"eval_mode", c.mode},
                     {"budget_cap", c.budget_cap},   {"allow_over_budget", c.allow_over_budget}};
}

void from_json(const nlohmann::json& j, QfisConfig& c) {
  static const std::set<std::string> kKeys = {"feature_map", "p0",        "target_size", "objective",
                                              "C",           "eval_mode", "budget_cap",  "allow_over_budget"};
  for (const auto& [key, _] : j.items()) require(kKeys.count(key) > 0, ErrorKind::kSchema, "unknown qfis key: " + key);
  c = QfisConfig{};
  if (j.contains("feature_map")) c.spec = j.at("feature_map").get<fmap::FeatureMapSpec>();
  c.p0 = j.value("p0", c.p0);
  c.target_size = j.value("target_size", c.target_size);
  if (j.contains("objective")) c.objective = objective_from_string(j.at("objective").get<std::string>());
  c.C = j.value("C", c.C);
  if (j.contains("eval_mode")) c.mode = j.at("eval_mode").get<qkernel::KernelEvalMode>();
  c.budget_cap = j.value("budget_cap", c.budget_cap);
  c.allow_over_budget = j.value("allow_over_budget", c.allow_over_budget);
}

std::size_t SelectionState::history_size() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.evaluated.size();
  return n;
}

std::vector<std::vector<std::size_t>> SelectionState::chain() const {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : stages) out.push_back(s.evaluated.at(s.chosen).features);
  return out;
}

double objective_value(const SubsetScore& s, Objective o) { return o == Objective::kAccuracy ? s.accuracy : s.auc; }

namespace {

Matrix closed_form_gram(double alpha, const Matrix& a, const Matrix& b, bool symmetric) {
  Matrix k(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = symmetric ? i : 0; j < b.rows(); ++j) {
      k(i, j) = (symmetric && i == j) ? 1.0 : fmap::z_kernel_closed_form(alpha, a.row(i), b.row(j));
      if (symmetric) k(j, i) = k(i, j);
    }
  return k;
}

}  // namespace

SubsetScore evaluate_subset(const QfisConfig& cfg, const Problem& prob, std::span<const std::size_t> features) {
  require(!features.empty(), ErrorKind::kInvalidArgument, "empty feature subset");
  std::set<std::size_t> seen;
  for (std::size_t f : features) {
    require(f < prob.n_features(), ErrorKind::kInvalidArgument, "feature index out of range");
    require(seen.insert(f).second, ErrorKind::kInvalidArgument, "duplicate feature index in subset");
  }
  const auto spec = cfg.spec.with_features(features.size());
  const Matrix xtr = prob.x_train.select_cols(features);
  const Matrix xte = prob.x_test.select_cols(features);

  // Sampled modes get a seed tied to the subset so results ignore evaluation order.
  qkernel::KernelEvalMode mode = cfg.mode;
  {
    std::uint64_t h = 0;
    for (std::size_t f : features) h = derive_seed(h, f + 1);
    mode.seed = derive_seed(cfg.mode.seed, h);
  }
  Matrix g, cross;
  if (cfg.closed_form_z) {
    g = closed_form_gram(spec.alpha, xtr, xtr, true);
    cross = closed_form_gram(spec.alpha, xte, xtr, false);
  } else {
    g = qkernel::gram(spec, xtr, mode, 1);
    cross = qkernel::gram_cross(spec, xtr, xte, mode, 1);
  }
  svm::TrainOptions opts;
  opts.C = cfg.C;
  const auto y = svm::to_signed(prob.y_train);
  const auto model = svm::train(g, y, opts);
  const auto scores = svm::decision_scores(model, cross);

  SubsetScore out;
  out.features.assign(features.begin(), features.end());
  out.accuracy = metrics::accuracy(prob.y_test, metrics::threshold_labels(scores, 0.0));
  out.auc = metrics::auc(prob.y_test, scores);
  return out;
}

namespace {

StageRecord run_stage(const QfisConfig& cfg, const Problem& prob, std::vector<std::vector<std::size_t>> subsets) {
  StageRecord rec;
  rec.size = subsets.empty() ? 0 : subsets.front().size();
  rec.evaluated.resize(subsets.size());
  parallel_for(
      subsets.size(), [&](std::size_t k) { rec.evaluated[k] = evaluate_subset(cfg, prob, subsets[k]); }, cfg.jobs);
  // Candidates arrive in tie-break order, so the first maximum wins.
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rec.evaluated.size(); ++k) {
    const double v = objective_value(rec.evaluated[k], cfg.objective);
    if (v > best) {
      best = v;
      rec.chosen = k;
    }
  }
  return rec;
}

}  // namespace

SelectionState select_initial_triples(const QfisConfig& cfg, const Problem& prob) {
  prob.validate();
  const std::size_t m = prob.n_features();
  cfg.validate(m);
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::size_t> comb(cfg.p0);
  for (std::size_t i = 0; i < cfg.p0; ++i) comb[i] = i;
  for (;;) {
    subsets.push_back(comb);
    std::size_t i = cfg.p0;
    while (i > 0 && comb[i - 1] == m - cfg.p0 + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t k = i; k < cfg.p0; ++k) comb[k] = comb[k - 1] + 1;
  }
  SelectionState st;
  st.m = m;
  st.p0 = cfg.p0;
  st.stages.push_back(run_stage(cfg, prob, std::move(subsets)));
  st.selected = st.stages.back().evaluated[st.stages.back().chosen].features;
  return st;
}

SelectionState extend_greedy(const QfisConfig& cfg, const Problem& prob, SelectionState state) {
  prob.validate();
  require(state.m == prob.n_features(), ErrorKind::kDimension, "selection state belongs to another problem");
  require(state.selected.size() < state.m, ErrorKind::kInvalidArgument, "all features already selected");
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t f = 0; f < state.m; ++f) {
    if (std::find(state.selected.begin(), state.selected.end(), f) != state.selected.end()) continue;
    auto s = state.selected;
    s.push_back(f);
    subsets.push_back(std::move(s));
  }
  state.stages.push_back(run_stage(cfg, prob, std::move(subsets)));
  state.selected = state.stages.back().evaluated[state.stages.back().chosen].features;
  return state;
}

SelectionState run_qfis(const QfisConfig& cfg, const Problem& prob) {
  auto st = select_initial_triples(cfg, prob);
  while (st.selected.size() < cfg.target_size) st = extend_greedy(cfg, prob, std::move(st));
  return st;
}

std::vector<fmap::FeatureMapSpec> standard_maps(const fmap::FeatureMapSpec& like) {
  std::vector<fmap::FeatureMapSpec> out;
  for (auto order : {fmap::Order::kZ, fmap::Order::kZZ})
    for (std::size_t d : {1, 2}) {
      auto s = like;
      s.order = order;
      s.depth = d;
      out.push_back(s);
    }
  return out;
}

std::vector<MapComparison> compare_maps(const QfisConfig& base, const std::vector<fmap::FeatureMapSpec>& specs,
                                        const Problem& prob) {
  std::vector<MapComparison> out;
  for (const auto& s : specs) {
    QfisConfig cfg = base;
    cfg.spec = s;
    cfg.closed_form_z = false;
    out.push_back({fmap::label(s), s, run_qfis(cfg, prob)});
  }
  return out;
}

namespace {

std::string join_features(std::span<const std::size_t> f, std::span<const std::string> names) {
  std::string s;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k) s += ';';
    s += names.empty() ? std::to_string(f[k]) : names[f[k]];
  }
  return s;
}

}  // namespace

std::string history_csv(const SelectionState& state, std::span<const std::string> names) {
  std::ostringstream os;
  os << "stage,feature_set,accuracy,auc,chosen\n";
  for (std::size_t s = 0; s < state.stages.size(); ++s) {
    const auto& st = state.stages[s];
    for (std::size_t k = 0; k < st.evaluated.size(); ++k) {
      const auto& e = st.evaluated[k];
      os << s << ',' << csv_escape(join_features(e.features, names)) << ',' << format_double(e.accuracy) << ','
         << format_double(e.auc) << ',' << (k == st.chosen ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

nlohmann::json selection_json(const SelectionState& state, std::span<const std::string> names) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : state.stages) {
    const auto& c = st.evaluated[st.chosen];
    nlohmann::json e{{"size", st.size},
                     {"evaluated", st.evaluated.size()},
                     {"features", c.features},
                     {"accuracy", c.accuracy},
                     {"auc", c.auc}};
    if (!names.empty()) {
      std::vector<std::string> nm;
      for (auto f : c.features) nm.push_back(names[f]);
      e["feature_names"] = nm;
    }
    stages.push_back(std::move(e));
  }
  nlohmann::json j{{"m", state.m}, {"p0", state.p0}, {"selected", state.selected}, {"stages", std::move(stages)}};
  if (!names.empty()) {
    std::vector<std::string> nm;
    for (auto f : state.selected) nm.push_back(names[f]);
    j["selected_names"] = nm;
  }
  return j;
}

}  // namespace qkf::qfis
