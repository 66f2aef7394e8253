// SPDX-License-Identifier: Apache-2.0
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qkf/error.hpp"
#include "qkf/metrics.hpp"

using namespace qkf;

TEST_CASE("accuracy and threshold labels") {
  std::vector<int> y{1, 0, 1, 1};
  CHECK(metrics::accuracy(y, std::vector<int>{1, 0, 0, 1}) == 0.75);
  CHECK(metrics::threshold_labels(std::vector<double>{0.2, 0.5, 0.7}, 0.5) == std::vector<int>{0, 1, 1});
  CHECK_THROWS_AS(metrics::accuracy(y, std::vector<int>{1}), Error);
}

TEST_CASE("auc matches pair counting") {
  std::mt19937_64 g(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + static_cast<std::size_t>(t);
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>((i + t) % 3 == 0);
      s[i] = static_cast<double>(g() % 5) / 4.0;  // many ties
    }
    CHECK(metrics::auc(y, s) == oracle::auc_pairs(y, s));
  }
  CHECK_THROWS_AS(metrics::auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), Error);
}

TEST_CASE("hit rate by count and by amount") {
  std::vector<int> y{1, 1, 0, 0};
  std::vector<int> pred{1, 0, 1, 0};
  std::vector<double> amt{100, 300, 5, 5};
  auto c = metrics::confusion(y, pred, amt);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(metrics::hit_rate(c) == 0.5);
  CHECK(metrics::hit_rate(c, metrics::Weighting::kAmount) == 0.25);
  auto c2 = metrics::confusion(y, std::vector<int>{0, 1, 0, 0}, amt);
  CHECK(metrics::hit_rate(c2, metrics::Weighting::kAmount) == 0.75);
  CHECK_THROWS_AS(metrics::hit_rate(metrics::confusion(std::vector<int>{0}, std::vector<int>{0})), Error);
}

TEST_CASE("false alarm ratio") {
  metrics::Confusion c;
  c.tp = 2;
  c.fp = 20;
  CHECK(metrics::false_alarm_ratio(c) == 10.0);
  c.tp = 0;
  CHECK(metrics::false_alarm_ratio(c) == std::numeric_limits<double>::infinity());
}

TEST_CASE("roc_star points match per-threshold recomputation") {
  std::mt19937_64 g(4);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 30;
    std::vector<int> y(n);
    std::vector<double> s(n), amt(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(i % 4 == 0);
      s[i] = static_cast<double>(g() % 10) / 10.0 + 0.1 * y[i];
      amt[i] = 1.0 + static_cast<double>(g() % 100);
    }
    for (auto w : {metrics::Weighting::kCount, metrics::Weighting::kAmount}) {
      auto curve = metrics::roc_star(y, s, amt, w, 3.0);
      CHECK(curve.points.size() >= 2);
      for (std::size_t k = 0; k < curve.points.size(); ++k) {
        const auto& p = curve.points[k];
        auto c = oracle::at_threshold(y, s, amt, p.threshold);
        const double hr = w == metrics::Weighting::kCount ? c.tp / (c.tp + c.fn)
                                                          : c.tp_amount / (c.tp_amount + c.fn_amount);
        CHECK(p.hit_rate == doctest::Approx(hr));
        if (c.tp > 0) CHECK(p.false_alarm_ratio == doctest::Approx(3.0 * c.fp / c.tp));
        else CHECK(std::isinf(p.false_alarm_ratio));
        if (k > 0) {
          const auto& q = curve.points[k - 1];
          CHECK(q.false_alarm_ratio <= p.false_alarm_ratio);
          if (q.false_alarm_ratio == p.false_alarm_ratio) CHECK(q.threshold > p.threshold);
        }
      }
      // the -inf threshold flags everything
      bool saw_all = false;
      for (const auto& p : curve.points) saw_all |= p.threshold == -std::numeric_limits<double>::infinity();
      CHECK(saw_all);
    }
  }
}

TEST_CASE("summaries") {
  std::vector<double> v{0.7, 0.8, 0.9};
  auto s = metrics::summarize(v);
  CHECK(s.n == 3);
  CHECK(s.mean == doctest::Approx(0.8));
  CHECK(s.std == doctest::Approx(0.1));
  CHECK(metrics::t_quantile_975(2) == doctest::Approx(4.302653).epsilon(1e-6));
  CHECK(metrics::t_quantile_975(30) == doctest::Approx(2.042272).epsilon(1e-6));
  CHECK(s.ci95 == doctest::Approx(4.302653 * 0.1 / std::sqrt(3.0)).epsilon(1e-6));
  CHECK(metrics::format_summary(s) == "0.800 ± 0.100");
  auto one = metrics::summarize(std::vector<double>{0.5});
  CHECK(one.std == 0.0);
}
