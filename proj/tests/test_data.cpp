// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qkf/dataset.hpp"
#include "qkf/error.hpp"
#include "qkf/preprocess.hpp"

using namespace qkf;

namespace {

SyntheticConfig small_cfg() {
  SyntheticConfig c;
  c.n_genuine = 300;
  c.n_fraud = 60;
  c.n_numeric = 6;
  c.n_categorical = 1;
  c.seed = 4;
  return c;
}

int error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return static_cast<int>(e.kind());
  }
  return 0;
}

}  // namespace

TEST_CASE("synthetic generator: counts, planting, determinism") {
  auto s = generate_synthetic_planted(small_cfg());
  s.data.validate();
  CHECK(s.data.count_label(0) == 300);
  CHECK(s.data.count_label(1) == 60);
  CHECK(s.data.n_features() == 7);
  CHECK(s.planted.single.size() == 2);
  CHECK(s.planted.pairs.size() == 1);
  for (std::size_t i = 1; i < s.data.size(); ++i) CHECK(s.data.timestamps[i] > s.data.timestamps[i - 1]);
  CHECK(generate_synthetic(small_cfg()) == s.data);
  auto other = small_cfg();
  other.seed = 5;
  CHECK_FALSE(generate_synthetic(other) == s.data);
  CHECK(dataset_hash(s.data) == dataset_hash(generate_synthetic(small_cfg())));
}

TEST_CASE("synthetic config validation and json") {
  auto c = small_cfg();
  c.n_informative_single = 5;
  c.n_informative_pair = 1;
  CHECK_THROWS_AS(c.validate(), Error);
  nlohmann::json j = small_cfg();
  CHECK(j.get<SyntheticConfig>().seed == 4);
  j["bogus"] = 1;
  CHECK(error_kind([&] { (void)j.get<SyntheticConfig>(); }) == static_cast<int>(ErrorKind::kSchema));
}

TEST_CASE("csv round trip is lossless") {
  auto d = generate_synthetic(small_cfg());
  std::stringstream ss;
  write_csv(ss, d, schema_for(d));
  auto back = read_csv(ss, schema_for(d));
  CHECK(back == d);
}

TEST_CASE("csv quoting and parse errors carry line numbers") {
  CsvSchema schema;
  schema.categorical = {"merchant"};
  std::istringstream ok("a,merchant,label,amount,timestamp\n1.5,\"x, \"\"y\"\"\",1,10,3\n");
  auto d = read_csv(ok, schema);
  REQUIRE(d.size() == 1);
  CHECK(std::get<std::string>(d.rows[0].values[1]) == "x, \"y\"");
  std::istringstream bad("a,merchant,label,amount,timestamp\n1,m,0,1,1\n2,m,2,1,2\n");
  try {
    read_csv(bad, schema);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream missing("a,label,amount\n1,0,1\n");
  CHECK(error_kind([&] { read_csv(missing, CsvSchema{}); }) == static_cast<int>(ErrorKind::kSchema));
  std::istringstream nan("a,label,amount,timestamp\nnan,0,1,1\n");
  CHECK(error_kind([&] { read_csv(nan, CsvSchema{}); }) == static_cast<int>(ErrorKind::kParse));
}

TEST_CASE("pearson matches the textbook formula") {
  std::mt19937_64 g(1);
  for (int t = 0; t < 10; ++t) {
    auto a = oracle::uniform_vec(g, 40, -1, 1), b = oracle::uniform_vec(g, 40, -1, 1);
    for (std::size_t i = 0; i < 40; ++i) b[i] += 0.3 * t * a[i];
    CHECK(pearson(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  }
  std::vector<double> c(5, 2.0), d{1, 2, 3, 4, 5};
  CHECK(pearson(c, d) == 0.0);
}

TEST_CASE("prune drops the later of a correlated pair and is idempotent") {
  auto d = generate_synthetic(small_cfg());
  // append a near copy of the first numeric column
  d.feature_names.push_back("copy");
  d.feature_kinds.push_back(FeatureKind::kNumeric);
  for (auto& r : d.rows) r.values.push_back(std::get<double>(r.values[0]) * 2.0 + 1.0);
  auto p = prune_correlated(d, 0.95);
  REQUIRE(p.removed.size() == 1);
  CHECK(p.removed[0] == "copy");
  auto again = prune_correlated(p.data, 0.95);
  CHECK(again.removed.empty());
  CHECK(again.data == p.data);
}

TEST_CASE("top category encoding") {
  Dataset d;
  d.feature_names = {"v", "c"};
  d.feature_kinds = {FeatureKind::kNumeric, FeatureKind::kCategorical};
  const char* codes[] = {"a", "b", "b", "c", "c", "c", "d"};
  const int labels[] = {1, 1, 1, 1, 1, 1, 0};
  for (int i = 0; i < 7; ++i) {
    d.rows.push_back({{double(i), std::string(codes[i])}});
    d.labels.push_back(labels[i]);
    d.amounts.push_back(1);
    d.timestamps.push_back(i);
  }
  auto enc = fit_top_categories(d, 2);
  REQUIRE(enc.columns.size() == 1);
  CHECK(enc.columns[0].top_codes == std::vector<std::string>{"c", "b"});
  auto e = apply_category_encoding(enc, d);
  CHECK(e.all_numeric());
  CHECK(e.feature_names == std::vector<std::string>{"v", "c=c", "c=b"});
  auto x = e.numeric_matrix();
  CHECK(x(0, 1) == 0.0);
  CHECK(x(0, 2) == 0.0);
  CHECK(x(3, 1) == 1.0);
  CHECK(x(1, 2) == 1.0);
}

TEST_CASE("chronological and random splits") {
  auto d = generate_synthetic(small_cfg());
  SplitSpec s;
  s.train_fraction = 0.6;
  auto tt = split(d, s);
  CHECK(tt.train.size() == 216);
  CHECK(tt.test.size() == 144);
  CHECK(tt.train.timestamps.back() < tt.test.timestamps.front());
  s.mode = SplitMode::kRandom;
  s.seed = 3;
  auto r1 = split(d, s), r2 = split(d, s);
  CHECK(r1.train == r2.train);
  CHECK(r1.train.size() == 216);
}

TEST_CASE("undersampling: balanced, without replacement, order kept") {
  auto d = generate_synthetic(small_cfg());
  auto trials = undersample_trials(d, 50, 40, 3, 10);
  REQUIRE(trials.size() == 3);
  for (const auto& t : trials) {
    CHECK(t.count_label(0) == 50);
    CHECK(t.count_label(1) == 40);
    std::set<std::int64_t> ts(t.timestamps.begin(), t.timestamps.end());
    CHECK(ts.size() == t.size());
    CHECK(std::is_sorted(t.timestamps.begin(), t.timestamps.end()));
  }
  CHECK_FALSE(trials[0] == trials[1]);
  CHECK(undersample_trials(d, 50, 40, 1, 11)[0] == trials[1]);
  CHECK_THROWS_AS(undersample_trials(d, 50, 100, 1, 0), Error);
}

TEST_CASE("scaler maps training range onto [lo, hi] and clamps") {
  Matrix tr = Matrix::from_rows({{0, 5}, {10, 5}, {5, 5}});
  auto p = fit_scaler(tr, -1, 1);
  auto s = apply_scaler(p, tr);
  CHECK(s(0, 0) == -1.0);
  CHECK(s(1, 0) == 1.0);
  CHECK(s(2, 0) == 0.0);
  CHECK(s(0, 1) == 0.0);  // constant column → midpoint
  auto t = apply_scaler(p, Matrix::from_rows({{20, 1}, {-3, 9}}));
  CHECK(t(0, 0) == 1.0);
  CHECK(t(1, 0) == -1.0);
  nlohmann::json j = p;
  CHECK(j.get<ScalerParams>().max == p.max);
}
