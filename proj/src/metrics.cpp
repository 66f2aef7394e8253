// SPDX-License-Identifier: Apache-2.0
#include "qkf/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "qkf/error.hpp"
#include "qkf/text.hpp"

namespace qkf::metrics {

double accuracy(std::span<const int> labels, std::span<const int> predictions) {
  require(!labels.empty(), ErrorKind::kInvalidArgument, "accuracy of an empty sample");
  require(labels.size() == predictions.size(), ErrorKind::kDimension, "accuracy: length mismatch");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += labels[i] == predictions[i];
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

double auc(std::span<const int> labels, std::span<const double> scores) {
  require(labels.size() == scores.size(), ErrorKind::kDimension, "auc: length mismatch");
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the count of (pos, neg) pairs with pos above neg, ties adding one.
  std::uint64_t twice = 0, neg_below = 0, n_pos = 0, n_neg = 0;
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t e = k;
    std::uint64_t gp = 0, gn = 0;
    while (e < idx.size() && scores[idx[e]] == scores[idx[k]]) {
      (labels[idx[e]] == 1 ? gp : gn) += 1;
      ++e;
    }
    twice += gp * (2 * neg_below + gn);
    neg_below += gn;
    n_pos += gp;
    n_neg += gn;
    k = e;
  }
  require(n_pos > 0 && n_neg > 0, ErrorKind::kInvalidArgument, "auc needs both classes");
  return static_cast<double>(twice) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<int> threshold_labels(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
  return out;
}

Confusion confusion(std::span<const int> labels, std::span<const int> predictions, std::span<const double> amounts) {
  require(labels.size() == predictions.size(), ErrorKind::kDimension, "confusion: length mismatch");
  require(amounts.empty() || amounts.size() == labels.size(), ErrorKind::kDimension, "confusion: amount mismatch");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double a = amounts.empty() ? 0.0 : amounts[i];
    if (labels[i] == 1) {
      if (predictions[i] == 1) {
        ++c.tp;
        c.tp_amount += a;
      } else {
        ++c.fn;
        c.fn_amount += a;
      }
    } else {
      ++(predictions[i] == 1 ? c.fp : c.tn);
    }
  }
  return c;
}

std::string to_string(Weighting w) { return w == Weighting::kCount ? "count" : "amount"; }

Weighting weighting_from_string(const std::string& s) {
  if (s == "count") return Weighting::kCount;
  if (s == "amount") return Weighting::kAmount;
  fail(ErrorKind::kSchema, "weighting must be count or amount, got '" + s + "'");
}

double hit_rate(const Confusion& c, Weighting w) {
  if (w == Weighting::kCount) {
    require(c.tp + c.fn > 0, ErrorKind::kInvalidArgument, "hit rate undefined: no fraud in sample");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  const double total = c.tp_amount + c.fn_amount;
  require(total > 0.0, ErrorKind::kInvalidArgument, "amount hit rate undefined: no fraud amount in sample");
  return c.tp_amount / total;
}

double false_alarm_ratio(const Confusion& c) {
  if (c.tp == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(c.fp) / static_cast<double>(c.tp);
}

RocStarCurve roc_star(std::span<const int> labels, std::span<const double> scores, std::span<const double> amounts,
                      Weighting weighting, double scale) {
  require(labels.size() == scores.size(), ErrorKind::kDimension, "roc_star: length mismatch");
  require(amounts.empty() || amounts.size() == labels.size(), ErrorKind::kDimension, "roc_star: amount mismatch");
  require(weighting == Weighting::kCount || !amounts.empty(), ErrorKind::kInvalidArgument,
          "amount weighting needs amounts");
  require(scale > 0.0 && std::isfinite(scale), ErrorKind::kInvalidArgument, "roc_star scale must be > 0");
  for (double s : scores) require(std::isfinite(s), ErrorKind::kNumeric, "roc_star: non-finite score");

  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  Confusion c;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      ++n_pos;
      c.fn_amount += amounts.empty() ? 0.0 : amounts[i];
    }
  }
  require(n_pos > 0 && n_pos < labels.size(), ErrorKind::kInvalidArgument, "roc_star needs both classes");
  c.fn = n_pos;
  c.tn = labels.size() - n_pos;

  RocStarCurve curve;
  curve.weighting = weighting;
  curve.scale = scale;
  auto emit = [&](double thr) {
    curve.points.push_back({thr, false_alarm_ratio(c) * scale, hit_rate(c, weighting)});
  };
  emit(std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t e = k;
    while (e < idx.size() && scores[idx[e]] == scores[idx[k]]) {
      const std::size_t r = idx[e];
      const double a = amounts.empty() ? 0.0 : amounts[r];
      if (labels[r] == 1) {
        ++c.tp;
        --c.fn;
        c.tp_amount += a;
        c.fn_amount -= a;
      } else {
        ++c.fp;
        --c.tn;
      }
      ++e;
    }
    if (c.fn == 0) c.fn_amount = 0.0;  // drop accumulated rounding
    const double hi = scores[idx[k]];
    emit(e < idx.size() ? hi + (scores[idx[e]] - hi) / 2.0 : -std::numeric_limits<double>::infinity());
    k = e;
  }
  std::stable_sort(curve.points.begin(), curve.points.end(), [](const RocStarPoint& a, const RocStarPoint& b) {
    return a.false_alarm_ratio < b.false_alarm_ratio;
  });
  return curve;
}

double t_quantile_975(std::size_t dof) {
  require(dof >= 1, ErrorKind::kInvalidArgument, "t quantile needs dof >= 1");
  return boost::math::quantile(boost::math::students_t(static_cast<double>(dof)), 0.975);
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  s.ci95 = t_quantile_975(s.n - 1) * s.std / std::sqrt(static_cast<double>(s.n));
  return s;
}

std::string format_summary(const Summary& s, int decimals) {
  return format_fixed(s.mean, decimals) + " ± " + format_fixed(s.std, decimals);
}

}  // namespace qkf::metrics
