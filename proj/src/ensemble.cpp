// SPDX-License-Identifier: Apache-2.0
#include "qkf/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qkf/error.hpp"
#include "qkf/metrics.hpp"
#include "qkf/rng.hpp"

namespace qkf::ensemble {

DisagreementSet find_disagreements(std::span<const double> q_scores, std::span<const double> c_scores,
                                   std::span<const int> labels, double threshold) {
  require(q_scores.size() == c_scores.size() && q_scores.size() == labels.size(), ErrorKind::kDimension,
          "find_disagreements: length mismatch");
  DisagreementSet d;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int q = q_scores[i] >= threshold, c = c_scores[i] >= threshold;
    if (q == c) continue;
    d.rows.push_back(i);
    d.labels.push_back(labels[i]);
    d.q_scores.push_back(q_scores[i]);
    d.c_scores.push_back(c_scores[i]);
    d.quantum_correct.push_back(q == labels[i] ? 1 : 0);
  }
  return d;
}

std::string to_string(MetaKind k) {
  switch (k) {
    case MetaKind::kPreferQuantum: return "prefer_quantum";
    case MetaKind::kPreferClassical: return "prefer_classical";
    case MetaKind::kConstantLabel: return "constant_label";
    case MetaKind::kLogistic: return "logistic";
    case MetaKind::kSvm: return "svm";
  }
  return "?";
}

MetaKind meta_kind_from_string(const std::string& s) {
  for (auto k : {MetaKind::kPreferQuantum, MetaKind::kPreferClassical, MetaKind::kConstantLabel, MetaKind::kLogistic,
                 MetaKind::kSvm})
    if (to_string(k) == s) return k;
  fail(ErrorKind::kSchema, "unknown meta kind '" + s + "'");
}

std::string to_string(MetaChoice c) {
  return c == MetaChoice::kAuto ? "auto" : c == MetaChoice::kLogistic ? "logistic" : "svm";
}

MetaChoice meta_choice_from_string(const std::string& s) {
  if (s == "auto") return MetaChoice::kAuto;
  if (s == "logistic") return MetaChoice::kLogistic;
  if (s == "svm") return MetaChoice::kSvm;
  fail(ErrorKind::kSchema, "meta must be auto, logistic or svm, got '" + s + "'");
}

int MetaModel::predict(std::span<const double> inputs, int q_label, int c_label) const {
  switch (kind) {
    case MetaKind::kPreferQuantum: return q_label;
    case MetaKind::kPreferClassical: return c_label;
    case MetaKind::kConstantLabel: return constant_label;
    case MetaKind::kLogistic: {
      Matrix row(1, inputs.size());
      std::copy(inputs.begin(), inputs.end(), row.row(0).begin());
      return classical::predict_logistic(logistic, row)[0] >= 0.5 ? 1 : 0;
    }
    case MetaKind::kSvm: {
      Matrix row(1, inputs.size());
      std::copy(inputs.begin(), inputs.end(), row.row(0).begin());
      return svm::decision_scores(svm, kernel, row)[0] >= 0.0 ? 1 : 0;
    }
  }
  return c_label;
}

void to_json(nlohmann::json& j, const MetaModel& m) {
  j = nlohmann::json{{"kind", to_string(m.kind)},
                     {"validation_logistic", m.validation_logistic},
                     {"validation_svm", m.validation_svm},
                     {"note", m.note}};
  if (m.kind == MetaKind::kConstantLabel) j["constant_label"] = m.constant_label;
  if (m.kind == MetaKind::kLogistic) j["logistic"] = m.logistic;
  if (m.kind == MetaKind::kSvm) {
    j["svm"] = m.svm;
    j["kernel"] = m.kernel;
  }
}

void from_json(const nlohmann::json& j, MetaModel& m) {
  m = MetaModel{};
  m.kind = meta_kind_from_string(j.at("kind").get<std::string>());
  m.validation_logistic = j.value("validation_logistic", -1.0);
  m.validation_svm = j.value("validation_svm", -1.0);
  m.note = j.value("note", std::string{});
  if (m.kind == MetaKind::kConstantLabel) m.constant_label = j.at("constant_label").get<int>();
  if (m.kind == MetaKind::kLogistic) m.logistic = j.at("logistic").get<classical::LogisticModel>();
  if (m.kind == MetaKind::kSvm) {
    m.svm = j.at("svm").get<svm::SvmModel>();
    m.kernel = j.at("kernel").get<svm::ClassicalKernelSpec>();
  }
}

namespace {

MetaModel fit_logistic_meta(const Matrix& in, std::span<const int> y, double l2) {
  MetaModel m;
  m.kind = MetaKind::kLogistic;
  m.logistic = classical::train_logistic(in, y, l2);
  return m;
}

MetaModel fit_svm_meta(const Matrix& in, std::span<const int> y, double C) {
  MetaModel m;
  m.kind = MetaKind::kSvm;
  m.kernel.kind = svm::ClassicalKind::kRbf;
  m.kernel.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(in.cols(), 1));
  svm::TrainOptions opts;
  opts.C = C;
  const auto ys = svm::to_signed(y);
  m.svm = svm::train(svm::classical_gram(m.kernel, in, in), ys, opts);
  m.svm.support_vectors = in.select_rows(m.svm.support_indices);
  m.svm.kernel_ref = m.kernel;
  return m;
}

double meta_accuracy(const MetaModel& m, const Matrix& in, std::span<const int> y) {
  std::vector<int> pred(in.rows());
  for (std::size_t r = 0; r < in.rows(); ++r) pred[r] = m.predict(in.row(r), 0, 0);
  return metrics::accuracy(y, pred);
}

bool has_both(std::span<const int> y) {
  return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

}  // namespace

MetaModel train_meta(const DisagreementSet& dis, const Matrix& inputs, const MetaOptions& opts) {
  require(inputs.rows() == dis.size(), ErrorKind::kDimension, "meta inputs must have one row per disagreement");
  MetaModel m;
  if (dis.size() == 0) {
    m.kind = MetaKind::kPreferClassical;
    m.note = "no disagreements; defers to the classical base";
    return m;
  }
  const auto nq = static_cast<std::size_t>(std::count(dis.quantum_correct.begin(), dis.quantum_correct.end(), 1));
  if (nq == dis.size()) {
    m.kind = MetaKind::kPreferQuantum;
    m.note = "quantum base correct on every disagreement";
    return m;
  }
  if (nq == 0) {
    m.kind = MetaKind::kPreferClassical;
    m.note = "classical base correct on every disagreement";
    return m;
  }
  if (!has_both(dis.labels)) {
    m.kind = MetaKind::kConstantLabel;
    m.constant_label = dis.labels.front();
    m.note = "disagreements share one true label";
    return m;
  }

  if (opts.choice == MetaChoice::kLogistic) return fit_logistic_meta(inputs, dis.labels, opts.l2);
  if (opts.choice == MetaChoice::kSvm) return fit_svm_meta(inputs, dis.labels, opts.svm_C);
  if (dis.size() < opts.min_rows_for_validation) {
    m = fit_logistic_meta(inputs, dis.labels, opts.l2);
    m.note = "logistic: fewer than " + std::to_string(opts.min_rows_for_validation) + " disagreement rows";
    return m;
  }

  // Stratified hold-out split of the disagreement rows.
  std::vector<std::size_t> fit_rows, val_rows;
  Rng rng(derive_seed(opts.seed, 0x3e7a));
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < dis.size(); ++i)
      if (dis.labels[i] == cls) idx.push_back(i);
    rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(std::llround(opts.validation_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k) (k < n_val ? val_rows : fit_rows).push_back(idx[k]);
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::vector<int> y_fit, y_val;
  for (auto i : fit_rows) y_fit.push_back(dis.labels[i]);
  for (auto i : val_rows) y_val.push_back(dis.labels[i]);
  if (!has_both(y_fit) || y_val.empty()) {
    m = fit_logistic_meta(inputs, dis.labels, opts.l2);
    m.note = "logistic: validation split degenerate";
    return m;
  }
  const Matrix in_fit = inputs.select_rows(fit_rows), in_val = inputs.select_rows(val_rows);
  const double acc_log = meta_accuracy(fit_logistic_meta(in_fit, y_fit, opts.l2), in_val, y_val);
  const double acc_svm = meta_accuracy(fit_svm_meta(in_fit, y_fit, opts.svm_C), in_val, y_val);
  m = acc_svm > acc_log ? fit_svm_meta(inputs, dis.labels, opts.svm_C) : fit_logistic_meta(inputs, dis.labels, opts.l2);
  m.validation_logistic = acc_log;
  m.validation_svm = acc_svm;
  m.note = "chosen by validation accuracy";
  return m;
}

double squash(double f, double scale) {
  const double z = f / scale;
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void to_json(nlohmann::json& j, const EnsembleSpec& s) {
  j = nlohmann::json{{"feature_map", s.map},
                     {"eval_mode", s.mode},
                     {"C", s.C},
                     {"classical_kind", classical::to_string(s.classical_kind)},
                     {"classical_params", s.classical_params},
                     {"threshold", s.threshold},
                     {"oof_folds", s.oof_folds},
                     {"meta", to_string(s.meta.choice)},
                     {"meta_min_rows", s.meta.min_rows_for_validation},
                     {"meta_validation_fraction", s.meta.validation_fraction},
                     {"meta_l2", s.meta.l2},
                     {"meta_svm_C", s.meta.svm_C},
                     {"seed", s.meta.seed}};
}

void from_json(const nlohmann::json& j, EnsembleSpec& s) {
  static const std::set<std::string> kKeys = {"feature_map", "eval_mode",  "C",
                                              "classical_kind", "classical_params", "threshold",
                                              "oof_folds",   "meta",       "meta_min_rows",
                                              "meta_validation_fraction", "meta_l2", "meta_svm_C",
                                              "seed"};
  for (const auto& [key, _] : j.items())
    require(kKeys.count(key) > 0, ErrorKind::kSchema, "unknown ensemble key: " + key);
  s = EnsembleSpec{};
  if (j.contains("feature_map")) s.map = j.at("feature_map").get<fmap::FeatureMapSpec>();
  if (j.contains("eval_mode")) s.mode = j.at("eval_mode").get<qkernel::KernelEvalMode>();
  s.C = j.value("C", s.C);
  if (j.contains("classical_kind"))
    s.classical_kind = classical::model_kind_from_string(j.at("classical_kind").get<std::string>());
  s.classical_params = j.value("classical_params", nlohmann::json::object());
  s.threshold = j.value("threshold", s.threshold);
  s.oof_folds = j.value("oof_folds", s.oof_folds);
  if (j.contains("meta")) s.meta.choice = meta_choice_from_string(j.at("meta").get<std::string>());
  s.meta.min_rows_for_validation = j.value("meta_min_rows", s.meta.min_rows_for_validation);
  s.meta.validation_fraction = j.value("meta_validation_fraction", s.meta.validation_fraction);
  s.meta.l2 = j.value("meta_l2", s.meta.l2);
  s.meta.svm_C = j.value("meta_svm_C", s.meta.svm_C);
  s.meta.seed = j.value("seed", s.meta.seed);
  require(s.threshold > 0.0 && s.threshold < 1.0, ErrorKind::kInvalidArgument, "threshold must be in (0, 1)");
  require(s.oof_folds != 1, ErrorKind::kInvalidArgument, "oof_folds must be 0 or >= 2");
}

nlohmann::json to_json(const EnsembleModel& m) {
  nlohmann::json cl;
  classical::to_json(cl, m.classical);
  return nlohmann::json{{"feature_map", m.map},
                        {"eval_mode", m.mode},
                        {"quantum_features", m.quantum_features},
                        {"quantum", m.quantum},
                        {"quantum_scale", m.quantum_scale},
                        {"classical_features", m.classical_features},
                        {"classical", cl},
                        {"meta_features", m.meta_features},
                        {"meta", m.meta},
                        {"threshold", m.threshold},
                        {"train_rows", m.train_rows},
                        {"train_disagreements", m.train_disagreements}};
}

EnsembleModel ensemble_from_json(const nlohmann::json& j) {
  EnsembleModel m;
  m.map = j.at("feature_map").get<fmap::FeatureMapSpec>();
  m.mode = j.at("eval_mode").get<qkernel::KernelEvalMode>();
  m.quantum_features = j.at("quantum_features").get<std::vector<std::size_t>>();
  m.quantum = j.at("quantum").get<svm::SvmModel>();
  m.quantum_scale = j.at("quantum_scale").get<double>();
  m.classical_features = j.at("classical_features").get<std::vector<std::size_t>>();
  m.classical = classical::any_model_from_json(j.at("classical"));
  m.meta_features = j.at("meta_features").get<std::vector<std::size_t>>();
  m.meta = j.at("meta").get<MetaModel>();
  m.threshold = j.at("threshold").get<double>();
  m.train_rows = j.value("train_rows", std::size_t{0});
  m.train_disagreements = j.value("train_disagreements", std::size_t{0});
  return m;
}

Matrix meta_inputs(const Matrix& x, std::span<const std::size_t> meta_features, std::span<const double> q,
                   std::span<const double> c, std::span<const std::size_t> rows) {
  const std::size_t m = meta_features.size();
  Matrix out(rows.size(), m + 2);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t r = rows[k];
    for (std::size_t f = 0; f < m; ++f) out(k, f) = x(r, meta_features[f]);
    out(k, m) = q[r];
    out(k, m + 1) = c[r];
  }
  return out;
}

namespace {

struct QuantumFit {
  svm::SvmModel model;
  double scale = 1.0;
};

/// Mean |f| over training rows; 1 if all scores vanish.
double score_scale(const svm::SvmModel& model, const Matrix& gram) {
  const auto f = svm::decision_scores(model, gram);
  double s = 0.0;
  for (double v : f) s += std::abs(v);
  s /= static_cast<double>(std::max<std::size_t>(f.size(), 1));
  return s > 1e-12 ? s : 1.0;
}

QuantumFit fit_quantum(const Matrix& gram, std::span<const int> labels, double C) {
  svm::TrainOptions opts;
  opts.C = C;
  QuantumFit q;
  q.model = svm::train(gram, svm::to_signed(labels), opts);
  q.scale = score_scale(q.model, gram);
  return q;
}

std::vector<std::size_t> check_features(std::span<const std::size_t> f, std::size_t m, const char* what) {
  require(!f.empty(), ErrorKind::kInvalidArgument, std::string(what) + " feature subset is empty");
  std::set<std::size_t> s(f.begin(), f.end());
  require(s.size() == f.size(), ErrorKind::kInvalidArgument, std::string(what) + " features contain duplicates");
  require(*s.rbegin() < m, ErrorKind::kInvalidArgument, std::string(what) + " feature index out of range");
  return {f.begin(), f.end()};
}

}  // namespace

EnsembleModel train_ensemble(const EnsembleSpec& spec, const Matrix& x, std::span<const int> labels,
                             std::span<const std::size_t> quantum_features,
                             std::span<const std::size_t> classical_features) {
  require(x.rows() == labels.size(), ErrorKind::kDimension, "label count does not match row count");
  require(has_both(labels), ErrorKind::kInvalidArgument, "ensemble training labels contain a single class");
  EnsembleModel em;
  em.map = spec.map.with_features(quantum_features.size());
  em.mode = spec.mode;
  em.threshold = spec.threshold;
  em.train_rows = x.rows();
  em.quantum_features = check_features(quantum_features, x.cols(), "quantum");
  em.classical_features = check_features(classical_features, x.cols(), "classical");
  std::set<std::size_t> uni(em.quantum_features.begin(), em.quantum_features.end());
  uni.insert(em.classical_features.begin(), em.classical_features.end());
  em.meta_features.assign(uni.begin(), uni.end());

  const Matrix xq = x.select_cols(em.quantum_features);
  const Matrix xc = x.select_cols(em.classical_features);
  const Matrix g = qkernel::gram(em.map, xq, spec.mode);
  auto qf = fit_quantum(g, labels, spec.C);
  em.quantum = std::move(qf.model);
  em.quantum_scale = qf.scale;
  em.quantum.support_vectors = xq.select_rows(em.quantum.support_indices);
  em.quantum.kernel_ref = nlohmann::json{{"feature_map", em.map}, {"eval_mode", spec.mode}};
  em.classical = classical::fit(spec.classical_kind, spec.classical_params, xc, labels);

  const std::size_t n = x.rows();
  std::vector<double> q(n), c(n);
  if (spec.oof_folds >= 2) {
    std::vector<std::size_t> fold(n);
    Rng rng(derive_seed(spec.meta.seed, 0x00f));
    for (int cls : {0, 1}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == cls) idx.push_back(i);
      require(idx.size() >= spec.oof_folds, ErrorKind::kInvalidArgument,
              "each class needs at least oof_folds training rows");
      rng.shuffle(idx);
      for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % spec.oof_folds;
    }
    for (std::size_t f = 0; f < spec.oof_folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
      std::vector<int> ytr;
      for (auto i : tr) ytr.push_back(labels[i]);
      const auto fq = fit_quantum(g.select(tr, tr), ytr, spec.C);
      const auto sq = svm::decision_scores(fq.model, g.select(te, tr));
      const auto mc = classical::fit(spec.classical_kind, spec.classical_params, xc.select_rows(tr), ytr);
      const auto sc = classical::predict(mc, xc.select_rows(te));
      for (std::size_t k = 0; k < te.size(); ++k) {
        q[te[k]] = squash(sq[k], fq.scale);
        c[te[k]] = sc[k];
      }
    }
  } else {
    const auto sq = svm::decision_scores(em.quantum, g);
    for (std::size_t i = 0; i < n; ++i) q[i] = squash(sq[i], em.quantum_scale);
    c = classical::predict(em.classical, xc);
  }
  const auto dis = find_disagreements(q, c, labels, spec.threshold);
  em.train_disagreements = dis.size();
  em.meta = train_meta(dis, meta_inputs(x, em.meta_features, q, c, dis.rows), spec.meta);
  return em;
}

BaseScores base_scores(const EnsembleModel& model, const Matrix& x) {
  BaseScores s;
  const Matrix xq = x.select_cols(model.quantum_features);
  const Matrix cross = qkernel::gram_cross(model.map, model.quantum.support_vectors, xq, model.mode);
  const auto f = svm::decision_scores(model.quantum, cross);
  s.quantum.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) s.quantum[i] = squash(f[i], model.quantum_scale);
  s.classical = classical::predict(model.classical, x.select_cols(model.classical_features));
  return s;
}

std::size_t EnsemblePrediction::n_agreed() const {
  return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), Provenance::kAgreed));
}

std::size_t EnsemblePrediction::n_meta_resolved() const { return provenance.size() - n_agreed(); }

EnsemblePrediction route(const EnsembleModel& model, const Matrix& x, BaseScores scores) {
  const std::size_t n = x.rows();
  require(scores.quantum.size() == n && scores.classical.size() == n, ErrorKind::kDimension,
          "base score count does not match row count");
  EnsemblePrediction p;
  p.labels.resize(n);
  p.provenance.resize(n);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const Matrix in = meta_inputs(x, model.meta_features, scores.quantum, scores.classical, all);
  for (std::size_t i = 0; i < n; ++i) {
    const int q = scores.quantum[i] >= model.threshold, c = scores.classical[i] >= model.threshold;
    if (q == c) {
      p.labels[i] = q;
      p.provenance[i] = Provenance::kAgreed;
    } else {
      p.labels[i] = model.meta.predict(in.row(i), q, c);
      p.provenance[i] = Provenance::kMetaResolved;
    }
  }
  p.scores = std::move(scores);
  return p;
}

EnsemblePrediction predict_ensemble(const EnsembleModel& model, const Matrix& x) {
  return route(model, x, base_scores(model, x));
}

Scatter complementarity_scatter(std::span<const double> q_scores, std::span<const double> c_scores,
                                std::span<const int> labels, double threshold) {
  require(q_scores.size() == c_scores.size() && q_scores.size() == labels.size(), ErrorKind::kDimension,
          "complementarity_scatter: length mismatch");
  Scatter s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.points.push_back({c_scores[i], q_scores[i], labels[i]});
    const bool q = q_scores[i] >= threshold, c = c_scores[i] >= threshold;
    if (q && c) ++s.quadrants.both;
    else if (!q && !c) ++s.quadrants.neither;
    else if (q) ++s.quadrants.q_only;
    else ++s.quadrants.c_only;
  }
  return s;
}

}  // namespace qkf::ensemble
