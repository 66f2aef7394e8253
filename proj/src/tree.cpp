// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkf/classical.hpp"
#include "qkf/error.hpp"
#include "qkf/rng.hpp"

namespace qkf::classical {

double TreeModel::predict(std::span<const double> row) const {
  require(!nodes.empty(), ErrorKind::kInvalidArgument, "empty tree");
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& nd = nodes[k];
    k = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
  }
  return nodes[k].value;
}

std::size_t TreeModel::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].feature < 0) continue;
    d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
    d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
    best = std::max(best, d[k] + 1);
  }
  return best;
}

void to_json(nlohmann::json& j, const TreeModel& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    if (n.feature < 0) {
      nodes.push_back({{"value", n.value}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                       {"gain", n.gain}});
    }
  }
  j = nlohmann::json{{"nodes", std::move(nodes)}};
}

void from_json(const nlohmann::json& j, TreeModel& t) {
  t.nodes.clear();
  for (const auto& n : j.at("nodes")) {
    TreeNode nd;
    if (n.contains("feature")) {
      nd.feature = n.at("feature").get<int>();
      nd.threshold = n.at("threshold").get<double>();
      nd.left = n.at("left").get<int>();
      nd.right = n.at("right").get<int>();
      nd.gain = n.value("gain", 0.0);
    } else {
      nd.value = n.at("value").get<double>();
    }
    t.nodes.push_back(nd);
  }
}

namespace {

/// Impurity bookkeeping for one side of a split. Classification uses
/// n·Gini over (count, positives); regression uses SSE over (count, Σt, Σt²).
struct Stats {
  double n = 0, s = 0, s2 = 0, h = 0;
  void add(double t, double hess) {
    n += 1;
    s += t;
    s2 += t * t;
    h += hess;
  }
  void sub(double t, double hess) {
    n -= 1;
    s -= t;
    s2 -= t * t;
    h -= hess;
  }
};

enum class Criterion { kGini, kSse };

double impurity(const Stats& st, Criterion c) {
  if (st.n <= 0) return 0.0;
  if (c == Criterion::kGini) {
    const double p = st.s / st.n;
    return st.n * 2.0 * p * (1.0 - p);
  }
  return std::max(0.0, st.s2 - st.s * st.s / st.n);
}

struct Builder {
  const Matrix& X;
  std::span<const double> target;
  std::span<const double> hess;
  TreeParams params;
  Criterion crit;
  Rng rng;
  TreeModel tree;

  int build(std::vector<std::size_t>& idx, std::size_t depth) {
    Stats all;
    for (std::size_t r : idx) all.add(target[r], hess.empty() ? 0.0 : hess[r]);
    const int me = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[static_cast<std::size_t>(me)].value = all.n > 0 ? all.s / all.n : 0.0;

    const double parent_imp = impurity(all, crit);
    if (depth >= params.max_depth || idx.size() < params.min_samples_split || idx.size() < 2 ||
        parent_imp <= 1e-12) {
      return me;
    }

    const std::size_t m = X.cols();
    std::vector<std::size_t> feats(m);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    if (params.max_features > 0 && params.max_features < m) {
      feats = sample_without_replacement(rng, m, params.max_features);
      std::sort(feats.begin(), feats.end());
    }

    double best_gain = 1e-12;
    int best_feat = -1;
    double best_thr = 0.0;
    std::vector<std::size_t> order(idx);
    for (std::size_t f : feats) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = X(a, f), vb = X(b, f);
        return va < vb || (va == vb && a < b);
      });
      Stats left, right = all;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t r = order[k];
        const double h = hess.empty() ? 0.0 : hess[r];
        left.add(target[r], h);
        right.sub(target[r], h);
        const double v = X(r, f), vn = X(order[k + 1], f);
        if (v == vn) continue;
        if (left.n < static_cast<double>(params.min_samples_leaf) ||
            right.n < static_cast<double>(params.min_samples_leaf))
          continue;
        if (crit == Criterion::kSse && (left.h < params.min_child_weight || right.h < params.min_child_weight))
          continue;
        const double gain = parent_imp - impurity(left, crit) - impurity(right, crit);
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = static_cast<int>(f);
          best_thr = 0.5 * (v + vn);
        }
      }
    }
    if (best_feat < 0) return me;

    std::vector<std::size_t> li, ri;
    for (std::size_t r : idx) (X(r, static_cast<std::size_t>(best_feat)) <= best_thr ? li : ri).push_back(r);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    auto& nd = tree.nodes[static_cast<std::size_t>(me)];
    nd.feature = best_feat;
    nd.threshold = best_thr;
    nd.left = l;
    nd.right = r;
    nd.gain = best_gain;
    return me;
  }
};

}  // namespace

TreeModel fit_classification_tree(const Matrix& X, std::span<const int> labels, std::span<const std::size_t> rows,
                                  const TreeParams& params, std::uint64_t seed) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "cannot fit a tree on no rows");
  std::vector<double> target(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) target[i] = labels[i] == 1 ? 1.0 : 0.0;
  Builder b{X, target, {}, params, Criterion::kGini, Rng(seed), {}};
  b.tree.params = params;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  b.build(idx, 0);
  return std::move(b.tree);
}

TreeModel fit_regression_tree(const Matrix& X, std::span<const double> targets, std::span<const double> hessian,
                              std::span<const std::size_t> rows, const TreeParams& params) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "cannot fit a tree on no rows");
  Builder b{X, targets, hessian, params, Criterion::kSse, Rng(0), {}};
  b.tree.params = params;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  b.build(idx, 0);
  return std::move(b.tree);
}

}  // namespace qkf::classical
