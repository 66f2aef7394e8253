// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>

#include "doctest.h"
#include "qkf/error.hpp"
#include "qkf/qfis.hpp"

using namespace qkf;

namespace {

qfis::Problem toy(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  qfis::Problem p{Matrix(40, m), std::vector<int>(40), Matrix(30, m), std::vector<int>(30), {}};
  auto fill = [&](Matrix& x, std::vector<int>& y) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < m; ++j) x(i, j) = u(g);
      y[i] = x(i, 1) + 0.5 * x(i, 3) + 0.3 * u(g) > 0;
    }
  };
  fill(p.x_train, p.y_train);
  fill(p.x_test, p.y_test);
  return p;
}

std::size_t choose(std::size_t n, std::size_t k) {
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

qfis::QfisConfig z1_cfg(std::size_t target) {
  qfis::QfisConfig c;
  c.spec.order = fmap::Order::kZ;
  c.spec.depth = 1;
  c.spec.alpha = 1.0;
  c.target_size = target;
  return c;
}

}  // namespace

TEST_CASE("history size and inclusion chain") {
  const std::size_t m = 6;
  auto prob = toy(m, 1);
  auto c = z1_cfg(5);
  auto st = qfis::run_qfis(c, prob);
  std::size_t expect = choose(m, 3);
  for (std::size_t s = 3; s < 5; ++s) expect += m - s;
  CHECK(st.history_size() == expect);
  CHECK(st.selected.size() == 5);
  auto chain = st.chain();
  REQUIRE(chain.size() == 3);
  for (std::size_t k = 1; k < chain.size(); ++k) {
    CHECK(chain[k].size() == chain[k - 1].size() + 1);
    for (auto f : chain[k - 1]) CHECK(std::find(chain[k].begin(), chain[k].end(), f) != chain[k].end());
  }
  std::vector<std::size_t> sorted = st.selected;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("initial stage picks the first maximum in lexicographic order") {
  auto prob = toy(5, 2);
  auto c = z1_cfg(3);
  auto st = qfis::select_initial_triples(c, prob);
  const auto& ev = st.stages[0].evaluated;
  REQUIRE(ev.size() == 10);
  CHECK(ev[0].features == std::vector<std::size_t>{0, 1, 2});
  CHECK(ev[9].features == std::vector<std::size_t>{2, 3, 4});
  double best = -1;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (ev[i].accuracy > best) best = ev[i].accuracy, arg = i;
  CHECK(st.stages[0].chosen == arg);
}

TEST_CASE("closed-form Z grams give the same selection path") {
  auto prob = toy(6, 3);
  auto c = z1_cfg(5);
  auto a = qfis::run_qfis(c, prob);
  c.closed_form_z = true;
  auto b = qfis::run_qfis(c, prob);
  CHECK(a.chain() == b.chain());
  for (std::size_t s = 0; s < a.stages.size(); ++s)
    for (std::size_t i = 0; i < a.stages[s].evaluated.size(); ++i)
      CHECK(a.stages[s].evaluated[i].accuracy == b.stages[s].evaluated[i].accuracy);
}

TEST_CASE("selection is job-count independent") {
  auto prob = toy(5, 4);
  auto c = z1_cfg(4);
  c.spec.order = fmap::Order::kZZ;
  c.jobs = 1;
  auto a = qfis::run_qfis(c, prob);
  c.jobs = 4;
  auto b = qfis::run_qfis(c, prob);
  CHECK(a.chain() == b.chain());
  CHECK(qfis::history_csv(a) == qfis::history_csv(b));
}

TEST_CASE("config validation") {
  auto c = z1_cfg(7);
  CHECK_THROWS_AS(c.validate(5), Error);  // target beyond m
  c.target_size = 3;
  c.p0 = 4;
  CHECK_THROWS_AS(c.validate(6), Error);
  c = z1_cfg(5);
  c.budget_cap = 10;
  CHECK_THROWS_AS(c.validate(6), Error);
  c.allow_over_budget = true;
  CHECK_NOTHROW(c.validate(6));
  c = z1_cfg(5);
  c.spec.order = fmap::Order::kZZ;
  c.closed_form_z = true;
  CHECK_THROWS_AS(c.validate(6), Error);
  CHECK_THROWS_AS((nlohmann::json{{"p0", 3}, {"greedy", true}}.get<qfis::QfisConfig>()), Error);
}

TEST_CASE("history csv layout") {
  auto prob = toy(4, 5);
  auto st = qfis::run_qfis(z1_cfg(4), prob);
  auto csv = qfis::history_csv(st, std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(csv.rfind("stage,feature_set,accuracy,auc,chosen\n", 0) == 0);
  CHECK(csv.find("a;b;c") != std::string::npos);
  auto j = qfis::selection_json(st);
  CHECK(j.at("selected").size() == 4);
}

TEST_CASE("standard maps") {
  fmap::FeatureMapSpec like;
  like.alpha = 0.3;
  auto maps = qfis::standard_maps(like);
  REQUIRE(maps.size() == 4);
  CHECK(fmap::label(maps[0]) == "Z-d1");
  CHECK(fmap::label(maps[3]) == "ZZ-d2");
  CHECK(maps[2].alpha == 0.3);
}
