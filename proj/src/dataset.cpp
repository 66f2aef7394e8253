// SPDX-License-Identifier: Apache-2.0
#include "qkf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "qkf/error.hpp"
#include "qkf/rng.hpp"
#include "qkf/text.hpp"

namespace qkf {

// ---------------------------------------------------------------- Dataset

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::validate() const {
  const std::size_t n = rows.size();
  require(labels.size() == n && amounts.size() == n && timestamps.size() == n, ErrorKind::kSchema,
          "dataset columns have unequal lengths");
  require(feature_kinds.size() == feature_names.size(), ErrorKind::kSchema,
          "feature kinds and names differ in length");
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    require(seen.insert(name).second, ErrorKind::kSchema, "duplicate feature name: " + name);
  }
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] == 0 || labels[i] == 1, ErrorKind::kSchema,
            "row " + std::to_string(i) + ": label must be 0 or 1");
    require(std::isfinite(amounts[i]) && amounts[i] >= 0.0, ErrorKind::kSchema,
            "row " + std::to_string(i) + ": amount must be a non-negative number");
    const auto& vals = rows[i].values;
    require(vals.size() == feature_names.size(), ErrorKind::kSchema,
            "row " + std::to_string(i) + ": wrong number of feature values");
    for (std::size_t j = 0; j < vals.size(); ++j) {
      if (feature_kinds[j] == FeatureKind::kNumeric) {
        const double* v = std::get_if<double>(&vals[j]);
        require(v != nullptr && std::isfinite(*v), ErrorKind::kSchema,
                "row " + std::to_string(i) + ": feature " + feature_names[j] + " is not a finite number");
      } else {
        require(std::holds_alternative<std::string>(vals[j]), ErrorKind::kSchema,
                "row " + std::to_string(i) + ": feature " + feature_names[j] + " is not a category code");
      }
    }
  }
}

std::size_t Dataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  require(it != feature_names.end(), ErrorKind::kSchema, "unknown feature: " + name);
  return static_cast<std::size_t>(it - feature_names.begin());
}

bool Dataset::all_numeric() const {
  return std::all_of(feature_kinds.begin(), feature_kinds.end(),
                     [](FeatureKind k) { return k == FeatureKind::kNumeric; });
}

Matrix Dataset::numeric_matrix() const {
  require(all_numeric(), ErrorKind::kSchema, "numeric matrix requested from a dataset with categorical features");
  Matrix m(rows.size(), feature_names.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < feature_names.size(); ++j) m(i, j) = std::get<double>(rows[i].values[j]);
  return m;
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.feature_names = feature_names;
  out.feature_kinds = feature_kinds;
  out.rows.reserve(idx.size());
  for (std::size_t i : idx) {
    require(i < rows.size(), ErrorKind::kDimension, "subset index out of range");
    out.rows.push_back(rows[i]);
    out.labels.push_back(labels[i]);
    out.amounts.push_back(amounts[i]);
    out.timestamps.push_back(timestamps[i]);
  }
  return out;
}

// ---------------------------------------------------------------- schema

void to_json(nlohmann::json& j, const CsvSchema& s) {
  j = nlohmann::json{{"label", s.label}, {"amount", s.amount}, {"timestamp", s.timestamp},
                     {"categorical", s.categorical}};
}

void from_json(const nlohmann::json& j, CsvSchema& s) {
  for (const char* key : {"label", "amount", "timestamp"}) {
    require(j.contains(key) && j.at(key).is_string(), ErrorKind::kSchema,
            std::string("schema must name a '") + key + "' column");
  }
  for (const auto& [key, _] : j.items()) {
    require(key == "label" || key == "amount" || key == "timestamp" || key == "categorical", ErrorKind::kSchema,
            "unknown schema key: " + key);
  }
  s.label = j.at("label").get<std::string>();
  s.amount = j.at("amount").get<std::string>();
  s.timestamp = j.at("timestamp").get<std::string>();
  s.categorical = j.value("categorical", std::vector<std::string>{});
}

CsvSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open schema file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, "schema " + path.string() + ": " + e.what());
  }
  return j.get<CsvSchema>();
}

// ---------------------------------------------------------------- CSV

namespace {

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// Reads one RFC 4180 record. Returns false at end of input.
bool next_record(std::istream& in, std::size_t& line, CsvRecord& rec) {
  rec.fields.clear();
  rec.line = line + 1;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_quoted = false;
  for (;;) {
    int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) fail(ErrorKind::kParse, "line " + std::to_string(rec.line) + ": unterminated quoted field");
      if (!any) return false;
      rec.fields.push_back(std::move(field));
      ++line;
      return true;
    }
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || field_quoted)
        fail(ErrorKind::kParse, "line " + std::to_string(rec.line) + ": stray quote inside field");
      in_quotes = true;
      field_quoted = true;
    } else if (ch == ',') {
      rec.fields.push_back(std::move(field));
      field.clear();
      field_quoted = false;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      rec.fields.push_back(std::move(field));
      ++line;
      return true;
    } else if (ch == '\n') {
      rec.fields.push_back(std::move(field));
      ++line;
      return true;
    } else {
      field += ch;
    }
  }
}

}  // namespace

Dataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::size_t line = 0;
  CsvRecord rec;
  require(next_record(in, line, rec), ErrorKind::kParse, "empty CSV input");
  const std::vector<std::string> header = rec.fields;

  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::kSchema, "missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = find_col(schema.label);
  const std::size_t amount_col = find_col(schema.amount);
  const std::size_t ts_col = find_col(schema.timestamp);
  std::set<std::string> categorical(schema.categorical.begin(), schema.categorical.end());
  for (const auto& c : categorical) find_col(c);

  Dataset data;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col || c == amount_col || c == ts_col) continue;
    feature_cols.push_back(c);
    data.feature_names.push_back(header[c]);
    data.feature_kinds.push_back(categorical.count(header[c]) ? FeatureKind::kCategorical : FeatureKind::kNumeric);
  }

  while (next_record(in, line, rec)) {
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    const std::string where = "line " + std::to_string(rec.line) + ": ";
    require(rec.fields.size() == header.size(), ErrorKind::kParse,
            where + "expected " + std::to_string(header.size()) + " fields, found " +
                std::to_string(rec.fields.size()));
    const auto& f = rec.fields;
    const std::string& lab = f[label_col];
    require(lab == "0" || lab == "1", ErrorKind::kParse, where + "label must be 0 or 1, got '" + lab + "'");
    data.labels.push_back(lab == "1" ? 1 : 0);

    auto amount = parse_double(f[amount_col]);
    require(amount && std::isfinite(*amount) && *amount >= 0.0, ErrorKind::kParse,
            where + "amount must be a non-negative number, got '" + f[amount_col] + "'");
    data.amounts.push_back(*amount);

    auto ts = parse_int(f[ts_col]);
    require(ts.has_value(), ErrorKind::kParse, where + "timestamp must be an integer, got '" + f[ts_col] + "'");
    data.timestamps.push_back(*ts);

    FeatureRow row;
    row.values.reserve(feature_cols.size());
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& cell = f[feature_cols[k]];
      if (data.feature_kinds[k] == FeatureKind::kCategorical) {
        row.values.emplace_back(cell);
      } else {
        auto v = parse_double(cell);
        require(v && std::isfinite(*v), ErrorKind::kParse,
                where + "column " + data.feature_names[k] + " expects a finite number, got '" + cell + "'");
        row.values.emplace_back(*v);
      }
    }
    data.rows.push_back(std::move(row));
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, const CsvSchema& schema) {
  for (const auto& name : data.feature_names) out << csv_escape(name) << ',';
  out << csv_escape(schema.label) << ',' << csv_escape(schema.amount) << ',' << csv_escape(schema.timestamp) << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const auto& v : data.rows[i].values) {
      if (const double* d = std::get_if<double>(&v)) {
        out << format_double(*d);
      } else {
        out << csv_escape(std::get<std::string>(v));
      }
      out << ',';
    }
    out << data.labels[i] << ',' << format_double(data.amounts[i]) << ',' << data.timestamps[i] << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const CsvSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write " + path.string());
  write_csv(out, data, schema);
}

CsvSchema schema_for(const Dataset& data) {
  CsvSchema s;
  for (std::size_t j = 0; j < data.n_features(); ++j)
    if (data.feature_kinds[j] == FeatureKind::kCategorical) s.categorical.push_back(data.feature_names[j]);
  return s;
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::ostringstream os;
  write_csv(os, data, schema_for(data));
  return fnv1a64(os.str());
}

// ---------------------------------------------------------------- synthetic

void SyntheticConfig::validate() const {
  require(n_genuine > 0 && n_fraud > 0, ErrorKind::kInvalidArgument, "class counts must be positive");
  require(n_numeric > 0, ErrorKind::kInvalidArgument, "n_numeric must be positive");
  require(n_informative_single + 2 * n_informative_pair <= n_numeric, ErrorKind::kInvalidArgument,
          "informative features exceed n_numeric");
  require(noise_sd >= 0.0 && std::isfinite(noise_sd), ErrorKind::kInvalidArgument, "noise_sd must be >= 0");
  require(n_categorical == 0 || n_categories >= 2, ErrorKind::kInvalidArgument, "need at least 2 category codes");
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json{{"n_genuine", c.n_genuine},
                     {"n_fraud", c.n_fraud},
                     {"n_numeric", c.n_numeric},
                     {"n_categorical", c.n_categorical},
                     {"n_informative_single", c.n_informative_single},
                     {"n_informative_pair", c.n_informative_pair},
                     {"noise_sd", c.noise_sd},
                     {"seed", c.seed},
                     {"single_shift", c.single_shift},
                     {"pair_strength", c.pair_strength},
                     {"n_categories", c.n_categories}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  static const std::set<std::string> kKeys = {
      "n_genuine", "n_fraud", "n_numeric", "n_categorical", "n_informative_single", "n_informative_pair",
      "noise_sd",  "seed",    "single_shift", "pair_strength", "n_categories"};
  for (const auto& [key, _] : j.items())
    require(kKeys.count(key) > 0, ErrorKind::kSchema, "unknown synthetic config key: " + key);
  SyntheticConfig d;
  c.n_genuine = j.value("n_genuine", d.n_genuine);
  c.n_fraud = j.value("n_fraud", d.n_fraud);
  c.n_numeric = j.value("n_numeric", d.n_numeric);
  c.n_categorical = j.value("n_categorical", d.n_categorical);
  c.n_informative_single = j.value("n_informative_single", d.n_informative_single);
  c.n_informative_pair = j.value("n_informative_pair", d.n_informative_pair);
  c.noise_sd = j.value("noise_sd", d.noise_sd);
  c.seed = j.value("seed", d.seed);
  c.single_shift = j.value("single_shift", d.single_shift);
  c.pair_strength = j.value("pair_strength", d.pair_strength);
  c.n_categories = j.value("n_categories", d.n_categories);
}

SyntheticData generate_synthetic_planted(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  // Informative roles land on random numeric columns.
  std::vector<std::size_t> perm(cfg.n_numeric);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  PlantedStructure planted;
  std::size_t next = 0;
  for (std::size_t k = 0; k < cfg.n_informative_single; ++k) planted.single.push_back(perm[next++]);
  for (std::size_t k = 0; k < cfg.n_informative_pair; ++k) {
    std::size_t a = perm[next++];
    std::size_t b = perm[next++];
    planted.pairs.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::vector<int> role(cfg.n_numeric, -1);  // -1 noise, -2 single, p >= 0 pair index
  for (std::size_t f : planted.single) role[f] = -2;
  for (std::size_t p = 0; p < planted.pairs.size(); ++p) {
    role[planted.pairs[p].first] = static_cast<int>(p);
    role[planted.pairs[p].second] = static_cast<int>(p);
  }

  Dataset data;
  for (std::size_t j = 0; j < cfg.n_numeric; ++j) {
    data.feature_names.push_back("f" + std::to_string(j));
    data.feature_kinds.push_back(FeatureKind::kNumeric);
  }
  for (std::size_t j = 0; j < cfg.n_categorical; ++j) {
    data.feature_names.push_back("cat" + std::to_string(j));
    data.feature_kinds.push_back(FeatureKind::kCategorical);
  }

  const std::size_t total = cfg.n_genuine + cfg.n_fraud;
  std::size_t have[2] = {0, 0};
  const std::size_t quota[2] = {cfg.n_genuine, cfg.n_fraud};
  std::vector<double> z(2 * planted.pairs.size());
  data.rows.reserve(total);

  while (have[0] + have[1] < total) {
    double logit = 0.0;
    for (std::size_t p = 0; p < planted.pairs.size(); ++p) {
      z[2 * p] = rng.normal();
      z[2 * p + 1] = rng.normal();
      logit += cfg.pair_strength * z[2 * p] * z[2 * p + 1];
    }
    const double p_fraud = 1.0 / (1.0 + std::exp(-logit));
    const int label = rng.uniform() < p_fraud ? 1 : 0;
    if (have[label] >= quota[label]) continue;
    ++have[label];

    FeatureRow row;
    row.values.reserve(data.n_features());
    for (std::size_t j = 0; j < cfg.n_numeric; ++j) {
      double v;
      if (role[j] == -2) {
        v = rng.normal() + (label == 1 ? 0.5 : -0.5) * cfg.single_shift;
      } else if (role[j] >= 0) {
        const auto& pr = planted.pairs[static_cast<std::size_t>(role[j])];
        v = z[2 * static_cast<std::size_t>(role[j]) + (j == pr.first ? 0 : 1)];
      } else {
        v = rng.normal();
      }
      row.values.emplace_back(v + cfg.noise_sd * rng.normal());
    }
    for (std::size_t j = 0; j < cfg.n_categorical; ++j) {
      std::size_t code;
      if (label == 1) {
        code = 0;
        while (code + 1 < cfg.n_categories && rng.uniform() < 0.5) ++code;
      } else {
        code = static_cast<std::size_t>(rng.below(cfg.n_categories));
      }
      // Shift so that fraud-heavy codes differ per column.
      code = (code + 3 * j) % cfg.n_categories;
      row.values.emplace_back(std::string(1, static_cast<char>('A' + code % 26)) +
                              (cfg.n_categories > 26 ? std::to_string(code / 26) : std::string{}));
    }
    const double mu = label == 1 ? 4.2 : 3.5;
    const double sd = label == 1 ? 1.2 : 1.0;
    const double amount = std::round(std::exp(mu + sd * rng.normal()) * 100.0) / 100.0;

    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
    data.amounts.push_back(amount);
    data.timestamps.push_back(0);
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  Dataset shuffled = data.subset(order);
  std::int64_t t = 1'600'000'000;
  for (std::size_t i = 0; i < total; ++i) {
    t += 1 + static_cast<std::int64_t>(rng.below(120));
    shuffled.timestamps[i] = t;
  }
  return {std::move(shuffled), std::move(planted)};
}

Dataset generate_synthetic(const SyntheticConfig& cfg) { return generate_synthetic_planted(cfg).data; }

}  // namespace qkf
