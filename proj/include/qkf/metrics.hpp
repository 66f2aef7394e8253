// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qkf::metrics {

/// Fraction of equal entries. Throws on empty or mismatched input.
double accuracy(std::span<const int> labels, std::span<const int> predictions);

/// Probability that a random positive outscores a random negative, ties
/// counted as one half. Throws Error(kInvalidArgument) on single-class input.
double auc(std::span<const int> labels, std::span<const double> scores);

/// score >= threshold → 1
std::vector<int> threshold_labels(std::span<const double> scores, double threshold);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double tp_amount = 0.0;  // money of fraud that was flagged
  double fn_amount = 0.0;  // money of fraud that passed
  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// `amounts` may be empty, leaving the amount totals at zero.
Confusion confusion(std::span<const int> labels, std::span<const int> predictions,
                    std::span<const double> amounts = {});

enum class Weighting { kCount, kAmount };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

/// tp/(tp+fn), or the amount-weighted analogue. Throws when the sample holds
/// no fraud (or no fraud money under amount weighting).
double hit_rate(const Confusion& c, Weighting w = Weighting::kCount);

/// fp/tp; +infinity when tp == 0.
double false_alarm_ratio(const Confusion& c);

struct RocStarPoint {
  double threshold = 0.0;
  double false_alarm_ratio = 0.0;
  double hit_rate = 0.0;
};

struct RocStarCurve {
  Weighting weighting = Weighting::kCount;
  double scale = 1.0;
  std::vector<RocStarPoint> points;
};

/// Hit rate against false alarm ratio over thresholds at +inf, the midpoints
/// of consecutive distinct scores, and -inf (score >= threshold flags).
/// Points are sorted by ascending false alarm ratio, equal ratios by
/// descending threshold. Ratios are multiplied by `scale`, e.g. the
/// under-sampling factor when the curve is computed on balanced data.
/// The +inf point has tp == 0 and therefore an infinite ratio.
RocStarCurve roc_star(std::span<const int> labels, std::span<const double> scores, std::span<const double> amounts,
                      Weighting weighting = Weighting::kCount, double scale = 1.0);

/// Mean, sample standard deviation and 95% t-interval half-width.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;
  double ci95 = 0.0;
};

Summary summarize(std::span<const double> values);
/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
double t_quantile_975(std::size_t dof);
/// "0.781 ± 0.010"
std::string format_summary(const Summary& s, int decimals = 3);

}  // namespace qkf::metrics
