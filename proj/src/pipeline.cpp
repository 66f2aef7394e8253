// SPDX-License-Identifier: Apache-2.0
#include "qkf/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qkf/error.hpp"
#include "qkf/metrics.hpp"
#include "qkf/parallel.hpp"
#include "qkf/rng.hpp"
#include "qkf/svg.hpp"
#include "qkf/svm.hpp"
#include "qkf/text.hpp"

namespace qkf::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorKind::kSchema, where + " must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    require(ok, ErrorKind::kSchema, "unknown key '" + k + "' in " + where);
  }
}

json opt_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> opt_size(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::size_t>();
}

json split_to_json(const SplitSpec& s) {
  return json{{"mode", s.mode == SplitMode::kChronological ? "chronological" : "random"},
              {"train_fraction", s.train_fraction}};
}

SplitSpec split_from_json(const json& j) {
  check_keys(j, {"mode", "train_fraction"}, "preprocess.split");
  SplitSpec s;
  const auto mode = j.value("mode", std::string("chronological"));
  require(mode == "chronological" || mode == "random", ErrorKind::kSchema,
          "preprocess.split.mode must be chronological or random");
  s.mode = mode == "random" ? SplitMode::kRandom : SplitMode::kChronological;
  s.train_fraction = j.value("train_fraction", s.train_fraction);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(data.synthetic.has_value() != !data.csv.empty(), ErrorKind::kSchema,
          "data needs exactly one of \"synthetic\" or \"csv\"");
  if (data.synthetic) data.synthetic->validate();
  preprocess.split.validate();
  require(preprocess.correlation_threshold > 0.0 && preprocess.correlation_threshold <= 1.0,
          ErrorKind::kInvalidArgument, "correlation_threshold must be in (0, 1]");
  require(preprocess.scale_hi > preprocess.scale_lo, ErrorKind::kInvalidArgument, "scale_hi must exceed scale_lo");
  require(!feature_maps.empty(), ErrorKind::kSchema, "feature_maps must list at least one map");
  for (const auto& m : feature_maps) m.with_features(std::max<std::size_t>(qfis.p0, 1)).validate();
  eval_mode.validate();
  require(C > 0.0, ErrorKind::kInvalidArgument, "svm.C must be > 0");
  require(trials >= 1, ErrorKind::kInvalidArgument, "trials must be >= 1");
  require(selection_trial < trials, ErrorKind::kInvalidArgument, "selection_trial must be < trials");
  if (classical.search) classical.search_spec.validate();
}

json ExperimentConfig::to_json() const {
  json d;
  if (data.synthetic) {
    d["synthetic"] = *data.synthetic;
  } else {
    d["csv"] = data.csv;
    d["schema"] = data.schema;
  }
  json us{{"train_genuine", opt_json(preprocess.undersample.train_genuine)},
          {"train_fraud", opt_json(preprocess.undersample.train_fraud)},
          {"test_genuine", opt_json(preprocess.undersample.test_genuine)},
          {"test_fraud", opt_json(preprocess.undersample.test_fraud)}};
  json pre{{"correlation_threshold", preprocess.correlation_threshold},
           {"top_categories", preprocess.top_categories},
           {"split", split_to_json(preprocess.split)},
           {"undersample", us},
           {"scale_lo", preprocess.scale_lo},
           {"scale_hi", preprocess.scale_hi}};
  json q{{"p0", qfis.p0},
         {"target_size", qfis.target_size},
         {"objective", qfis::to_string(qfis.objective)},
         {"budget_cap", qfis.budget_cap},
         {"allow_over_budget", qfis.allow_over_budget}};
  json cl{{"kind", classical::to_string(classical.kind)}, {"params", classical.params}, {"search", classical.search}};
  if (classical.search)
    cl["search_spec"] = json{{"n_candidates", classical.search_spec.n_candidates},
                             {"k_folds", classical.search_spec.k_folds},
                             {"objective", classical.search_spec.objective == classical::Objective::kAuc ? "auc"
                                                                                                       : "accuracy"}};
  json ens{{"classical_kind", classical::to_string(ensemble.classical_kind)},
           {"classical_params", ensemble.classical_params},
           {"threshold", ensemble.threshold},
           {"oof_folds", ensemble.oof_folds},
           {"meta", ensemble::to_string(ensemble.meta.choice)},
           {"meta_min_rows", ensemble.meta.min_rows_for_validation},
           {"meta_validation_fraction", ensemble.meta.validation_fraction},
           {"meta_l2", ensemble.meta.l2},
           {"meta_svm_C", ensemble.meta.svm_C}};
  return json{{"data", d},
              {"preprocess", pre},
              {"feature_maps", feature_maps},
              {"qfis", q},
              {"svm", {{"C", C}}},
              {"eval_mode", eval_mode},
              {"classical", cl},
              {"ensemble", ens},
              {"trials", trials},
              {"selection_trial", selection_trial},
              {"seed", seed},
              {"kernel_cache", kernel_cache},
              {"out", out}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j,
             {"data", "preprocess", "feature_maps", "qfis", "svm", "eval_mode", "classical", "ensemble", "trials",
              "selection_trial", "seed", "kernel_cache", "out"},
             "config");
  ExperimentConfig c;
  c.seed = j.value("seed", c.seed);
  require(j.contains("data"), ErrorKind::kSchema, "config needs a \"data\" section");
  const auto& d = j.at("data");
  check_keys(d, {"synthetic", "csv", "schema"}, "data");
  if (d.contains("synthetic")) c.data.synthetic = d.at("synthetic").get<SyntheticConfig>();
  c.data.csv = d.value("csv", std::string{});
  if (d.contains("schema")) c.data.schema = d.at("schema").get<CsvSchema>();

  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    check_keys(p, {"correlation_threshold", "top_categories", "split", "undersample", "scale_lo", "scale_hi"},
               "preprocess");
    c.preprocess.correlation_threshold = p.value("correlation_threshold", c.preprocess.correlation_threshold);
    c.preprocess.top_categories = p.value("top_categories", c.preprocess.top_categories);
    if (p.contains("split")) c.preprocess.split = split_from_json(p.at("split"));
    if (p.contains("undersample")) {
      const auto& u = p.at("undersample");
      check_keys(u, {"train_genuine", "train_fraud", "test_genuine", "test_fraud"}, "preprocess.undersample");
      c.preprocess.undersample = {opt_size(u, "train_genuine"), opt_size(u, "train_fraud"),
                                  opt_size(u, "test_genuine"), opt_size(u, "test_fraud")};
    }
    c.preprocess.scale_lo = p.value("scale_lo", c.preprocess.scale_lo);
    c.preprocess.scale_hi = p.value("scale_hi", c.preprocess.scale_hi);
  }
  c.preprocess.split.seed = c.seed;
  if (j.contains("feature_maps")) c.feature_maps = j.at("feature_maps").get<std::vector<fmap::FeatureMapSpec>>();
  if (j.contains("qfis")) {
    const auto& q = j.at("qfis");
    check_keys(q, {"p0", "target_size", "objective", "budget_cap", "allow_over_budget"}, "qfis");
    c.qfis = q.get<qfis::QfisConfig>();
  }
  if (j.contains("svm")) {
    check_keys(j.at("svm"), {"C"}, "svm");
    c.C = j.at("svm").value("C", c.C);
  }
  if (j.contains("eval_mode")) c.eval_mode = j.at("eval_mode").get<qkernel::KernelEvalMode>();
  if (j.contains("classical")) {
    const auto& cl = j.at("classical");
    check_keys(cl, {"kind", "params", "search", "search_spec"}, "classical");
    if (cl.contains("kind")) c.classical.kind = classical::model_kind_from_string(cl.at("kind").get<std::string>());
    c.classical.params = cl.value("params", json::object());
    c.classical.search = cl.value("search", false);
    if (cl.contains("search_spec")) {
      const auto& s = cl.at("search_spec");
      check_keys(s, {"n_candidates", "k_folds", "objective"}, "classical.search_spec");
      c.classical.search_spec.n_candidates = s.value("n_candidates", c.classical.search_spec.n_candidates);
      c.classical.search_spec.k_folds = s.value("k_folds", c.classical.search_spec.k_folds);
      const auto obj = s.value("objective", std::string("accuracy"));
      require(obj == "accuracy" || obj == "auc", ErrorKind::kSchema, "search objective must be accuracy or auc");
      c.classical.search_spec.objective = obj == "auc" ? classical::Objective::kAuc : classical::Objective::kAccuracy;
    }
    // Validate params eagerly so typos fail before any computation.
    if (c.classical.kind != classical::ModelKind::kLogistic) {
      if (c.classical.kind == classical::ModelKind::kForest) (void)c.classical.params.get<classical::ForestParams>();
      else (void)c.classical.params.get<classical::GbtParams>();
    }
  }
  c.classical.search_spec.seed = c.seed;
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    require(!e.contains("feature_map") && !e.contains("eval_mode") && !e.contains("C") && !e.contains("seed"),
            ErrorKind::kSchema, "ensemble takes feature_map, eval_mode, C and seed from the top-level config");
    c.ensemble = e.get<ensemble::EnsembleSpec>();
  }
  c.ensemble.meta.seed = c.seed;
  c.trials = j.value("trials", c.trials);
  c.selection_trial = j.value("selection_trial", c.selection_trial);
  c.kernel_cache = j.value("kernel_cache", c.kernel_cache);
  c.out = j.value("out", c.out);
  c.validate();
  return c;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("out");
  return hex64(fnv1a64(j.dump()));
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, "config " + path.string() + ": " + e.what());
  }
  try {
    return ExperimentConfig::from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, "config " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- artifacts

namespace {

const char* kHashPrefix = "# config_hash: ";

struct Ctx {
  const ExperimentConfig& cfg;
  fs::path out;
  std::size_t jobs;
  std::string hash;

  fs::path at(const std::string& rel) const { return out / rel; }
};

Ctx make_ctx(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (opts.jobs) set_default_jobs(opts.jobs);
  return Ctx{cfg, opts.out.empty() ? fs::path(cfg.out) : opts.out, opts.jobs, cfg.hash()};
}

void write_file(const fs::path& p, const std::string& content) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot write " + p.string());
  out << content;
  require(out.good(), ErrorKind::kIo, "write failed for " + p.string());
}

std::string read_file(const fs::path& p, const std::string& producer) {
  std::ifstream in(p, std::ios::binary);
  require(in.good(), ErrorKind::kMissingArtifact,
          "missing " + p.string() + "; run `qkf " + producer + "` with this config first");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv_artifact(const Ctx& c, const std::string& rel, const std::string& body) {
  write_file(c.at(rel), kHashPrefix + c.hash + "\n" + body);
}

std::string artifact_hash_line(const std::string& text) {
  if (text.rfind(kHashPrefix, 0) != 0) return {};
  const auto eol = text.find('\n');
  return text.substr(std::string(kHashPrefix).size(), eol - std::string(kHashPrefix).size());
}

/// Body of a hashed CSV, refusing artifacts from another configuration.
std::string read_csv_artifact(const Ctx& c, const std::string& rel, const std::string& producer) {
  const std::string text = read_file(c.at(rel), producer);
  const std::string h = artifact_hash_line(text);
  require(!h.empty(), ErrorKind::kSchema, c.at(rel).string() + " has no config hash line");
  require(h == c.hash, ErrorKind::kSchema,
          c.at(rel).string() + " was produced by config " + h + ", current config is " + c.hash + "; rerun `qkf " +
              producer + "`");
  return text.substr(text.find('\n') + 1);
}

void write_json_artifact(const Ctx& c, const std::string& rel, json j) {
  j["config_hash"] = c.hash;
  write_file(c.at(rel), j.dump(2) + "\n");
}

json read_json_artifact(const Ctx& c, const std::string& rel, const std::string& producer) {
  const std::string text = read_file(c.at(rel), producer);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, c.at(rel).string() + ": " + e.what());
  }
  const auto h = j.value("config_hash", std::string{});
  require(h == c.hash, ErrorKind::kSchema,
          c.at(rel).string() + " was produced by config " + (h.empty() ? "<none>" : h) + ", current config is " +
              c.hash + "; rerun `qkf " + producer + "`");
  j.erase("config_hash");
  return j;
}

void write_svg_artifact(const Ctx& c, const std::string& rel, svg::PlotSpec spec,
                        const std::function<std::string(const svg::PlotSpec&)>& render) {
  spec.comment = "config_hash: " + c.hash;
  write_file(c.at(rel), render(spec));
}

Dataset read_dataset_artifact(const Ctx& c, const std::string& rel, const std::string& producer,
                              const CsvSchema& schema) {
  std::istringstream in(read_csv_artifact(c, rel, producer));
  return read_csv(in, schema);
}

std::string dataset_csv(const Dataset& d, const CsvSchema& schema) {
  std::ostringstream os;
  write_csv(os, d, schema);
  return os.str();
}

std::string trial_dir(std::size_t t) { return "prep/trial_" + std::to_string(t) + "/"; }
std::string model_dir(std::size_t t) { return "models/trial_" + std::to_string(t) + "/"; }

/// Minimal RFC 4180 split of one line (no embedded newlines in our files).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::kSchema, "table has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double num(std::size_t r, const std::string& name) const {
    auto v = parse_double(rows[r][col(name)]);
    if (!v) {
      const auto& s = rows[r][col(name)];
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
      fail(ErrorKind::kParse, "non-numeric value '" + s + "' in column " + name);
    }
    return *v;
  }
};

Table parse_table(const std::string& body) {
  Table t;
  std::istringstream in(body);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      t.header = split_csv_line(line);
      first = false;
    } else {
      t.rows.push_back(split_csv_line(line));
      require(t.rows.back().size() == t.header.size(), ErrorKind::kParse, "ragged table row: " + line);
    }
  }
  return t;
}

CsvSchema prepared_schema() { return CsvSchema{}; }

struct TrialData {
  Dataset train, test;
  Matrix x_train, x_test;
};

TrialData load_trial(const Ctx& c, std::size_t t) {
  TrialData d;
  d.train = read_dataset_artifact(c, trial_dir(t) + "train.csv", "preprocess", prepared_schema());
  d.test = read_dataset_artifact(c, trial_dir(t) + "test.csv", "preprocess", prepared_schema());
  d.x_train = d.train.numeric_matrix();
  d.x_test = d.test.numeric_matrix();
  return d;
}

std::vector<std::size_t> main_selection(const Ctx& c, std::size_t m) {
  const auto label = fmap::label(c.cfg.feature_maps.front());
  const json sel = read_json_artifact(c, "select/selection_" + label + ".json", "select");
  auto f = sel.at("selected").get<std::vector<std::size_t>>();
  for (auto i : f) require(i < m, ErrorKind::kSchema, "selection refers to a feature beyond the prepared table");
  return f;
}

qkernel::KernelEvalMode trial_mode(const ExperimentConfig& cfg, std::size_t t) {
  auto m = cfg.eval_mode;
  m.seed = derive_seed(cfg.eval_mode.seed, t);
  return m;
}

Matrix cached_gram(const Ctx& c, const fmap::FeatureMapSpec& spec, const Matrix& rows,
                   const qkernel::KernelEvalMode& mode, std::uint64_t data_hash, std::span<const std::size_t> feats) {
  if (!c.cfg.kernel_cache) return qkernel::gram(spec, rows, mode);
  const auto key = qkernel::kernel_cache_key(data_hash, feats, spec, mode);
  const fs::path p = c.at("cache/" + hex64(key) + ".qkfk");
  if (auto hit = qkernel::load_kernel_cache(p, key)) return *hit;
  Matrix g = qkernel::gram(spec, rows, mode);
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  qkernel::save_kernel_cache(p, key, g);
  return g;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string kpi_header() {
  return "trial,accuracy,auc,hit_rate,hit_rate_amount,false_alarm_ratio,tp,fp,tn,fn\n";
}

std::string kpi_row(std::size_t trial, std::span<const int> labels, std::span<const int> pred,
                    std::span<const double> scores, std::span<const double> amounts) {
  const auto cm = metrics::confusion(labels, pred, amounts);
  std::ostringstream os;
  os << trial << ',' << format_double(metrics::accuracy(labels, pred)) << ','
     << format_double(metrics::auc(labels, scores)) << ','
     << format_double(metrics::hit_rate(cm, metrics::Weighting::kCount)) << ','
     << (cm.tp_amount + cm.fn_amount > 0 ? format_double(metrics::hit_rate(cm, metrics::Weighting::kAmount))
                                          : std::string("nan"))
     << ',' << format_double(metrics::false_alarm_ratio(cm)) << ',' << cm.tp << ',' << cm.fp << ',' << cm.tn << ','
     << cm.fn << '\n';
  return os.str();
}

std::string roc_csv(const metrics::RocStarCurve& curve) {
  std::ostringstream os;
  os << "threshold,fp_ratio,hit_rate\n";
  for (const auto& p : curve.points)
    os << format_double(p.threshold) << ',' << format_double(p.false_alarm_ratio) << ','
       << format_double(p.hit_rate) << '\n';
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- commands

void cmd_generate(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  Dataset d;
  CsvSchema schema;
  json meta;
  if (cfg.data.synthetic) {
    auto s = generate_synthetic_planted(*cfg.data.synthetic);
    d = std::move(s.data);
    schema = schema_for(d);
    json pairs = json::array();
    for (auto [a, b] : s.planted.pairs) pairs.push_back({a, b});
    meta["planted"] = json{{"single", s.planted.single}, {"pairs", pairs}};
  } else {
    d = load_csv(cfg.data.csv, cfg.data.schema);
    schema = schema_for(d);
  }
  write_csv_artifact(c, "data/data.csv", dataset_csv(d, schema));
  write_json_artifact(c, "data/schema.json", schema);
  meta["rows"] = d.size();
  meta["fraud"] = d.count_label(1);
  meta["features"] = d.feature_names;
  meta["dataset_hash"] = hex64(dataset_hash(d));
  write_json_artifact(c, "data/meta.json", meta);
}

void cmd_preprocess(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  const CsvSchema schema = read_json_artifact(c, "data/schema.json", "generate").get<CsvSchema>();
  Dataset d = read_dataset_artifact(c, "data/data.csv", "generate", schema);
  const auto& pp = cfg.preprocess;
  std::vector<std::string> removed;
  const bool enough_numeric = std::count(d.feature_kinds.begin(), d.feature_kinds.end(), FeatureKind::kNumeric) >= 2;
  if (enough_numeric) {
    auto pr = prune_correlated(d, pp.correlation_threshold);
    d = std::move(pr.data);
    removed = std::move(pr.removed);
  }
  auto tt = split(d, pp.split);
  const auto enc = fit_top_categories(tt.train, pp.top_categories);
  tt.train = apply_category_encoding(enc, tt.train);
  tt.test = apply_category_encoding(enc, tt.test);

  auto target = [](const std::optional<std::size_t>& want, std::size_t have) { return want ? *want : have; };
  const std::size_t trg = target(pp.undersample.train_genuine, tt.train.count_label(0));
  const std::size_t trf = target(pp.undersample.train_fraud, tt.train.count_label(1));
  const std::size_t teg = target(pp.undersample.test_genuine, tt.test.count_label(0));
  const std::size_t tef = target(pp.undersample.test_fraud, tt.test.count_label(1));
  const auto trains = undersample_trials(tt.train, trg, trf, cfg.trials, derive_seed(cfg.seed, 1));
  const auto tests = undersample_trials(tt.test, teg, tef, cfg.trials, derive_seed(cfg.seed, 2));
  // False-alarm ratios on under-sampled test sets scale by the genuine/fraud
  // sampling-rate ratio to read as full-population ratios.
  const double scale = (static_cast<double>(tt.test.count_label(0)) / static_cast<double>(std::max<std::size_t>(teg, 1))) /
                       (static_cast<double>(tt.test.count_label(1)) / static_cast<double>(std::max<std::size_t>(tef, 1)));

  const CsvSchema out_schema = prepared_schema();
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto sc = fit_scaler(trains[t], pp.scale_lo, pp.scale_hi);
    write_csv_artifact(c, trial_dir(t) + "train.csv", dataset_csv(apply_scaler(sc, trains[t]), out_schema));
    write_csv_artifact(c, trial_dir(t) + "test.csv", dataset_csv(apply_scaler(sc, tests[t]), out_schema));
    write_json_artifact(c, trial_dir(t) + "scaler.json", sc);
  }
  json meta{{"removed_correlated", removed},
            {"encoding", enc},
            {"features", tt.train.feature_names},
            {"split", {{"train_rows", tt.train.size()},
                       {"train_fraud", tt.train.count_label(1)},
                       {"test_rows", tt.test.size()},
                       {"test_fraud", tt.test.count_label(1)}}},
            {"trial_shape", {{"train_genuine", trg}, {"train_fraud", trf}, {"test_genuine", teg}, {"test_fraud", tef}}},
            {"roc_scale", scale},
            {"trials", cfg.trials}};
  write_json_artifact(c, "prep/meta.json", meta);
}

void cmd_select(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  const auto td = load_trial(c, cfg.selection_trial);
  qfis::Problem prob{td.x_train, td.train.labels, td.x_test, td.test.labels, td.train.feature_names};
  qfis::QfisConfig q = cfg.qfis;
  q.C = cfg.C;
  q.mode = trial_mode(cfg, cfg.selection_trial);
  q.jobs = c.jobs;
  std::ostringstream cmp;
  cmp << "map,stage,size,accuracy,auc,features\n";
  for (const auto& spec : cfg.feature_maps) {
    q.spec = spec;
    const auto st = qfis::run_qfis(q, prob);
    const auto label = fmap::label(spec);
    write_csv_artifact(c, "select/history_" + label + ".csv", qfis::history_csv(st, prob.feature_names));
    json sel = qfis::selection_json(st, prob.feature_names);
    sel["feature_map"] = spec;
    write_json_artifact(c, "select/selection_" + label + ".json", sel);
    for (std::size_t s = 0; s < st.stages.size(); ++s) {
      const auto& best = st.stages[s].evaluated[st.stages[s].chosen];
      std::string names;
      for (std::size_t k = 0; k < best.features.size(); ++k)
        names += (k ? ";" : "") + prob.feature_names[best.features[k]];
      cmp << label << ',' << s << ',' << best.features.size() << ',' << format_double(best.accuracy) << ','
          << format_double(best.auc) << ',' << csv_escape(names) << '\n';
    }
  }
  write_csv_artifact(c, "select/comparison.csv", cmp.str());
}

void cmd_train(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  const auto spec0 = cfg.feature_maps.front();
  json cl_params = cfg.classical.params;
  if (cfg.classical.search) {
    const auto td = load_trial(c, cfg.selection_trial);
    const auto res =
        classical::randomized_search(td.x_train, td.train.labels, cfg.classical.kind, cfg.classical.search_spec);
    std::ostringstream os;
    os << "candidate,params,mean_score,fold_scores\n";
    for (std::size_t k = 0; k < res.table.size(); ++k) {
      std::string folds;
      for (std::size_t f = 0; f < res.table[k].fold_scores.size(); ++f)
        folds += (f ? ";" : "") + format_double(res.table[k].fold_scores[f]);
      os << k << ',' << csv_escape(res.table[k].params.dump()) << ',' << format_double(res.table[k].mean_score) << ','
         << folds << '\n';
    }
    write_csv_artifact(c, "models/search.csv", os.str());
    cl_params = res.best_params;
  }
  std::ostringstream imp;
  imp << "trial,rank,feature,importance\n";
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto td = load_trial(c, t);
    const auto feats = main_selection(c, td.x_train.cols());
    const auto spec = spec0.with_features(feats.size());
    const auto mode = trial_mode(cfg, t);
    const Matrix xq = td.x_train.select_cols(feats);
    const Matrix g = cached_gram(c, spec, xq, mode, dataset_hash(td.train), feats);
    svm::TrainOptions to;
    to.C = cfg.C;
    auto model = svm::train(g, svm::to_signed(td.train.labels), to);
    model.support_vectors = xq.select_rows(model.support_indices);
    model.kernel_ref = json{{"feature_map", spec}, {"eval_mode", mode}};
    json qj = model;
    qj["features"] = feats;
    write_json_artifact(c, model_dir(t) + "quantum.json", qj);

    const auto cm = classical::fit(cfg.classical.kind, cl_params, td.x_train, td.train.labels);
    json cj = cm;
    cj["params"] = cl_params;
    write_json_artifact(c, model_dir(t) + "classical.json", cj);
    const auto w = classical::feature_importance(cm);
    std::vector<std::size_t> order(w.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
    for (std::size_t r = 0; r < order.size(); ++r)
      imp << t << ',' << r + 1 << ',' << csv_escape(td.train.feature_names[order[r]]) << ','
          << format_double(w[order[r]]) << '\n';
  }
  write_csv_artifact(c, "models/importance.csv", imp.str());
}

void cmd_evaluate(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  const double scale = read_json_artifact(c, "prep/meta.json", "preprocess").at("roc_scale").get<double>();
  std::string kq = kpi_header(), kc = kpi_header();
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto td = load_trial(c, t);
    const json qj = read_json_artifact(c, model_dir(t) + "quantum.json", "train");
    const auto qm = qj.get<svm::SvmModel>();
    const auto feats = qj.at("features").get<std::vector<std::size_t>>();
    const auto spec = qm.kernel_ref.at("feature_map").get<fmap::FeatureMapSpec>();
    const auto mode = qm.kernel_ref.at("eval_mode").get<qkernel::KernelEvalMode>();
    const Matrix cross = qkernel::gram_cross(spec, qm.support_vectors, td.x_test.select_cols(feats), mode);
    const auto qs = svm::decision_scores(qm, cross);
    kq += kpi_row(t, td.test.labels, metrics::threshold_labels(qs, 0.0), qs, td.test.amounts);

    const auto cm = classical::any_model_from_json(read_json_artifact(c, model_dir(t) + "classical.json", "train"));
    const auto cs = classical::predict(cm, td.x_test);
    kc += kpi_row(t, td.test.labels, metrics::threshold_labels(cs, 0.5), cs, td.test.amounts);

    for (auto [name, scores] : {std::pair{"quantum", &qs}, std::pair{"classical", &cs}}) {
      write_csv_artifact(c, "eval/roc_" + std::string(name) + "_trial_" + std::to_string(t) + ".csv",
                         roc_csv(metrics::roc_star(td.test.labels, *scores, td.test.amounts,
                                                   metrics::Weighting::kCount, scale)));
    }
  }
  write_csv_artifact(c, "eval/kpi_quantum.csv", kq);
  write_csv_artifact(c, "eval/kpi_classical.csv", kc);
}

void cmd_ensemble(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  std::ostringstream kpi;
  kpi << "trial,accuracy,auc_quantum,auc_classical,quantum_accuracy,classical_accuracy,"
         "train_disagreement_rate,test_disagreement_rate,meta_kind,agreed,meta_resolved\n";
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto td = load_trial(c, t);
    const auto feats = main_selection(c, td.x_train.cols());
    std::vector<std::size_t> all(td.x_train.cols());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ensemble::EnsembleSpec es = cfg.ensemble;
    es.map = cfg.feature_maps.front();
    es.mode = trial_mode(cfg, t);
    es.C = cfg.C;
    es.meta.seed = derive_seed(cfg.seed, t, 3);
    const auto em = ensemble::train_ensemble(es, td.x_train, td.train.labels, feats, all);
    json ej = ensemble::to_json(em);
    ej["quantum_model_file"] = model_dir(t) + "quantum.json";
    ej["classical_model_file"] = model_dir(t) + "classical.json";
    write_json_artifact(c, "ensemble/trial_" + std::to_string(t) + ".json", ej);

    const auto pred = ensemble::predict_ensemble(em, td.x_test);
    const auto& y = td.test.labels;
    const double n = static_cast<double>(y.size());
    kpi << t << ',' << format_double(metrics::accuracy(y, pred.labels)) << ','
        << format_double(metrics::auc(y, pred.scores.quantum)) << ','
        << format_double(metrics::auc(y, pred.scores.classical)) << ','
        << format_double(metrics::accuracy(y, metrics::threshold_labels(pred.scores.quantum, em.threshold))) << ','
        << format_double(metrics::accuracy(y, metrics::threshold_labels(pred.scores.classical, em.threshold))) << ','
        << format_double(static_cast<double>(em.train_disagreements) / static_cast<double>(em.train_rows)) << ','
        << format_double(static_cast<double>(pred.n_meta_resolved()) / n) << ',' << ensemble::to_string(em.meta.kind)
        << ',' << pred.n_agreed() << ',' << pred.n_meta_resolved() << '\n';
    if (t == cfg.selection_trial) {
      const auto sc = ensemble::complementarity_scatter(pred.scores.quantum, pred.scores.classical, y, em.threshold);
      std::ostringstream os;
      os << "c_score,q_score,label\n";
      for (const auto& p : sc.points)
        os << format_double(p.c_score) << ',' << format_double(p.q_score) << ',' << p.label << '\n';
      write_csv_artifact(c, "ensemble/scatter.csv", os.str());
    }
  }
  write_csv_artifact(c, "ensemble/kpi_ensemble.csv", kpi.str());
}

namespace {

struct KpiFile {
  std::string model;
  std::string rel;
  std::string producer;
};

std::string md_summary_row(const std::string& name, const Table& t, const std::vector<std::string>& cols) {
  std::string row = "| " + name;
  for (const auto& col : cols) {
    std::vector<double> v;
    for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(t.num(r, col));
    const auto s = metrics::summarize(v);
    row += " | " + metrics::format_summary(s) + " (CI ± " + format_fixed(s.ci95, 3) + ")";
  }
  return row + " |\n";
}

}  // namespace

void cmd_report(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Ctx c = make_ctx(cfg, opts);
  // Every artifact must carry this config's hash; read_* refuses others.
  const std::vector<KpiFile> files{{"QSVM", "eval/kpi_quantum.csv", "evaluate"},
                                   {"Classical", "eval/kpi_classical.csv", "evaluate"}};
  std::ostringstream md, summary;
  md << "# Experiment report\n\nconfig_hash: `" << c.hash << "`\n\n";
  summary << "model,metric,n,mean,std,ci95\n";

  const std::vector<std::string> kpi_cols{"accuracy", "auc", "hit_rate", "false_alarm_ratio"};
  std::map<std::string, Table> tables;
  for (const auto& f : files) tables[f.model] = parse_table(read_csv_artifact(c, f.rel, f.producer));
  const bool have_ens = fs::exists(c.at("ensemble/kpi_ensemble.csv"));
  Table ens;
  if (have_ens) ens = parse_table(read_csv_artifact(c, "ensemble/kpi_ensemble.csv", "ensemble"));

  md << "## Per-trial test KPIs\n\n| Trial | Model | Accuracy | AUC | Hit rate | False alarm ratio |\n"
        "|---|---|---|---|---|---|\n";
  for (const auto& f : files) {
    const auto& t = tables[f.model];
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      md << "| " << t.rows[r][t.col("trial")] << " | " << f.model << " | " << format_fixed(t.num(r, "accuracy"), 3)
         << " | " << format_fixed(t.num(r, "auc"), 3) << " | " << format_fixed(t.num(r, "hit_rate"), 3) << " | "
         << format_fixed(t.num(r, "false_alarm_ratio"), 3) << " |\n";
  }
  md << "\n## Averages over trials (mean ± std, 95% t-interval half-width)\n\n"
        "| Model | Accuracy | AUC | Hit rate | False alarm ratio |\n|---|---|---|---|---|\n";
  for (const auto& f : files) {
    const auto& t = tables[f.model];
    md << md_summary_row(f.model, t, kpi_cols);
    for (const auto& col : kpi_cols) {
      std::vector<double> v;
      for (std::size_t r = 0; r < t.rows.size(); ++r) v.push_back(t.num(r, col));
      const auto s = metrics::summarize(v);
      summary << f.model << ',' << col << ',' << s.n << ',' << format_double(s.mean) << ',' << format_double(s.std)
              << ',' << format_double(s.ci95) << '\n';
    }
  }
  if (have_ens) {
    md << "\n## Ensemble\n\n| Model | Accuracy |\n|---|---|\n";
    for (auto [name, col] : {std::pair{"QSVM", "quantum_accuracy"}, std::pair{"Classical", "classical_accuracy"},
                             std::pair{"QSVM + classical", "accuracy"}}) {
      md << md_summary_row(name, ens, {col});
      std::vector<double> v;
      for (std::size_t r = 0; r < ens.rows.size(); ++r) v.push_back(ens.num(r, col));
      const auto s = metrics::summarize(v);
      summary << "ensemble_" << col << ",accuracy," << s.n << ',' << format_double(s.mean) << ','
              << format_double(s.std) << ',' << format_double(s.ci95) << '\n';
    }
    std::vector<double> dtr, dte;
    for (std::size_t r = 0; r < ens.rows.size(); ++r) {
      dtr.push_back(ens.num(r, "train_disagreement_rate"));
      dte.push_back(ens.num(r, "test_disagreement_rate"));
    }
    md << "\nBases disagree on " << format_fixed(100 * metrics::summarize(dtr).mean, 1) << "% of training rows and "
       << format_fixed(100 * metrics::summarize(dte).mean, 1) << "% of test rows (mean over trials).\n";
  }

  // Feature selection: accuracy by stage, per map.
  md << "\n## Feature selection\n\n| Map | Stage | Size | Accuracy | AUC | Features |\n|---|---|---|---|---|---|\n";
  const Table cmp = parse_table(read_csv_artifact(c, "select/comparison.csv", "select"));
  std::vector<svg::Series> stage_series;
  for (std::size_t r = 0; r < cmp.rows.size(); ++r) {
    const auto& map = cmp.rows[r][cmp.col("map")];
    md << "| " << map << " | " << cmp.rows[r][cmp.col("stage")] << " | " << cmp.rows[r][cmp.col("size")] << " | "
       << format_fixed(cmp.num(r, "accuracy"), 3) << " | " << format_fixed(cmp.num(r, "auc"), 3) << " | "
       << cmp.rows[r][cmp.col("features")] << " |\n";
    if (stage_series.empty() || stage_series.back().name != map) stage_series.push_back({map, {}, {}, true, true});
    stage_series.back().x.push_back(cmp.num(r, "size"));
    stage_series.back().y.push_back(cmp.num(r, "accuracy"));
  }
  write_svg_artifact(c, "report/accuracy_vs_stage.svg", {"Best test accuracy per selection stage", "features", "accuracy"},
                     [&](const svg::PlotSpec& s) { return svg::plot(s, stage_series); });
  for (const auto& spec : cfg.feature_maps) {
    const auto label = fmap::label(spec);
    const Table h = parse_table(read_csv_artifact(c, "select/history_" + label + ".csv", "select"));
    std::vector<std::string> groups;
    std::vector<std::vector<double>> vals;
    for (std::size_t r = 0; r < h.rows.size(); ++r) {
      const auto stage = static_cast<std::size_t>(h.num(r, "stage"));
      while (vals.size() <= stage) {
        vals.emplace_back();
        groups.push_back(std::to_string(split_names(h.rows[r][h.col("feature_set")]).size()));
      }
      vals[stage].push_back(h.num(r, "accuracy"));
    }
    write_svg_artifact(c, "report/spread_" + label + ".svg",
                       {"Accuracy spread per stage, " + label, "subset size", "accuracy"},
                       [&](const svg::PlotSpec& s) { return svg::box_plot(s, groups, vals); });
  }

  // ROC* curves per model, one series per trial.
  for (auto model : {"quantum", "classical"}) {
    std::vector<svg::Series> series;
    std::ostringstream all;
    all << "trial,threshold,fp_ratio,hit_rate\n";
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const Table r = parse_table(read_csv_artifact(
          c, "eval/roc_" + std::string(model) + "_trial_" + std::to_string(t) + ".csv", "evaluate"));
      svg::Series s{"trial " + std::to_string(t), {}, {}, true, false};
      for (std::size_t k = 0; k < r.rows.size(); ++k) {
        s.x.push_back(r.num(k, "fp_ratio"));
        s.y.push_back(r.num(k, "hit_rate"));
        all << t << ',' << r.rows[k][0] << ',' << r.rows[k][1] << ',' << r.rows[k][2] << '\n';
      }
      series.push_back(std::move(s));
    }
    write_csv_artifact(c, "report/roc_" + std::string(model) + ".csv", all.str());
    svg::PlotSpec ps{std::string("ROC* ") + model + " (false alarm ratio scaled to full population)",
                     "false alarm ratio", "hit rate"};
    ps.y_lo = 0;
    ps.y_hi = 1;
    write_svg_artifact(c, "report/roc_" + std::string(model) + ".svg", ps,
                       [&](const svg::PlotSpec& s) { return svg::plot(s, series); });
  }

  if (have_ens && fs::exists(c.at("ensemble/scatter.csv"))) {
    const Table sc = parse_table(read_csv_artifact(c, "ensemble/scatter.csv", "ensemble"));
    svg::Series genuine{"genuine", {}, {}, false, true}, fraud{"fraud", {}, {}, false, true};
    for (std::size_t r = 0; r < sc.rows.size(); ++r) {
      auto& s = sc.num(r, "label") == 1 ? fraud : genuine;
      s.x.push_back(sc.num(r, "c_score"));
      s.y.push_back(sc.num(r, "q_score"));
    }
    svg::PlotSpec ps{"Classical vs quantum scores", "classical score", "quantum score"};
    ps.x_lo = ps.y_lo = 0;
    ps.x_hi = ps.y_hi = 1;
    write_svg_artifact(c, "report/scatter.svg", ps,
                       [&](const svg::PlotSpec& s) { return svg::plot(s, {genuine, fraud}); });
  }

  write_file(c.at("report/report.md"), md.str());
  write_csv_artifact(c, "report/summary.csv", summary.str());
}

void cmd_all(const ExperimentConfig& cfg, const RunOptions& opts) {
  for (const auto& name : command_names()) run_command(name, cfg, opts);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"generate", "preprocess", "select", "train",
                                              "evaluate", "ensemble",   "report"};
  return names;
}

void run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opts) {
  if (name == "generate") return cmd_generate(cfg, opts);
  if (name == "preprocess") return cmd_preprocess(cfg, opts);
  if (name == "select") return cmd_select(cfg, opts);
  if (name == "train") return cmd_train(cfg, opts);
  if (name == "evaluate") return cmd_evaluate(cfg, opts);
  if (name == "ensemble") return cmd_ensemble(cfg, opts);
  if (name == "report") return cmd_report(cfg, opts);
  if (name == "all") return cmd_all(cfg, opts);
  fail(ErrorKind::kInvalidArgument, "unknown command '" + name + "'");
}

}  // namespace qkf::pipeline
