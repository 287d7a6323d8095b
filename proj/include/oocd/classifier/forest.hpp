// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Random forest of depth-limited Gini trees with bootstrap sampling and
// per-split feature subsampling; majority vote.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/error.hpp"
#include "oocd/random.hpp"

namespace oocd {

struct ForestConfig {
  unsigned trees = 100;
  unsigned max_depth = 4;
  /// Features tried per split; 0 means round(sqrt(feature count)).
  unsigned features_per_split = 0;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  Label zero_margin_label = Label::OOC;
};

/// Flat tree node. Leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;   // x[feature] <= threshold
  int right = -1;  // x[feature] >  threshold
  Label leaf_label = Label::NOOC;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  Label predict(std::span<const double> x) const {
    int at = 0;
    while (nodes[at].feature >= 0) {
      const auto& n = nodes[at];
      at = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[at].leaf_label;
  }

  std::size_t depth() const { return depth_from(0); }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_from(int at) const {
    const auto& n = nodes[at];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  FeatureOrder feature_order = kCanonicalOrder;
  TrainingMeta training_meta;

  /// Margin is the OOC vote share mapped to [-1, 1].
  Prediction predict(const FeatureRow& row) const {
    if (row.order != feature_order) throw FeatureOrderMismatch();
    std::size_t ooc = 0;
    for (const auto& t : trees) ooc += t.predict(row.features) == Label::OOC ? 1 : 0;
    const double m = 2.0 * static_cast<double>(ooc) / static_cast<double>(trees.size()) - 1.0;
    return {m > 0.0 ? Label::OOC : (m < 0.0 ? Label::NOOC : config.zero_margin_label), m};
  }
};

struct GiniSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  /// Size-weighted Gini impurity of the two children.
  double impurity = 0.0;
};

inline double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

/// Best Gini split of `rows` over `features`, thresholds at midpoints of
/// consecutive distinct values. Ties go to the earlier feature in `features`
/// and then to the lower threshold. nullopt when every feature is constant.
inline std::optional<GiniSplit> best_gini_split(const TrainingMatrix& m, std::span<const std::size_t> rows,
                                                std::span<const std::size_t> features) {
  std::optional<GiniSplit> best;
  const double n = static_cast<double>(rows.size());
  double pos_total = 0.0;
  for (auto r : rows) pos_total += m.y[r] > 0 ? 1.0 : 0.0;

  std::vector<std::size_t> order(rows.begin(), rows.end());
  for (const auto f : features) {
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return m.at(a, f) < m.at(b, f); });
    double left_n = 0.0, left_pos = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      left_n += 1.0;
      left_pos += m.y[order[k]] > 0 ? 1.0 : 0.0;
      const double v = m.at(order[k], f);
      const double next = m.at(order[k + 1], f);
      if (!(next > v)) continue;
      const double right_n = n - left_n;
      const double imp = (left_n * gini(left_pos, left_n) + right_n * gini(pos_total - left_pos, right_n)) / n;
      if (!best || imp < best->impurity - 1e-12) best = GiniSplit{f, std::midpoint(v, next), imp};
    }
  }
  return best;
}

namespace detail {

inline Label majority_label(const TrainingMatrix& m, std::span<const std::size_t> rows, Label tie) {
  std::ptrdiff_t balance = 0;
  for (auto r : rows) balance += m.y[r];
  if (balance > 0) return Label::OOC;
  if (balance < 0) return Label::NOOC;
  return tie;
}

inline int grow_tree(DecisionTree& tree, const TrainingMatrix& m, std::vector<std::size_t> rows, unsigned depth,
                     const ForestConfig& cfg, std::size_t mtry, Rng& rng) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  tree.nodes[id].leaf_label = majority_label(m, rows, cfg.zero_margin_label);

  bool pure = true;
  for (auto r : rows) pure = pure && m.y[r] == m.y[rows.front()];
  if (pure || depth >= cfg.max_depth || rows.size() < 2) return id;

  std::vector<std::size_t> features(m.cols);
  std::iota(features.begin(), features.end(), std::size_t{0});
  if (mtry < m.cols) {
    for (std::size_t i = 0; i < mtry; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, m.cols - i));
      std::swap(features[i], features[j]);
    }
    features.resize(mtry);
    std::ranges::sort(features);
  }
  const auto split = best_gini_split(m, rows, features);
  if (!split) return id;

  std::vector<std::size_t> left, right;
  for (auto r : rows) (m.at(r, split->feature) <= split->threshold ? left : right).push_back(r);
  tree.nodes[id].feature = static_cast<int>(split->feature);
  tree.nodes[id].threshold = split->threshold;
  const int l = grow_tree(tree, m, std::move(left), depth + 1, cfg, mtry, rng);
  tree.nodes[id].left = l;
  const int r = grow_tree(tree, m, std::move(right), depth + 1, cfg, mtry, rng);
  tree.nodes[id].right = r;
  return id;
}

}  // namespace detail

inline std::size_t default_features_per_split(std::size_t feature_count) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(feature_count)))));
}

inline RandomForestModel train_random_forest(const TrainingMatrix& m, const ForestConfig& config = {}) {
  if (m.rows < 2) throw DegenerateData("random forest: need at least 2 rows");
  if (m.single_class()) throw DegenerateData("random forest: both labels must be present");
  if (config.trees == 0) throw ConfigError("random forest: need at least one tree");

  RandomForestModel model;
  model.config = config;
  model.training_meta.seed = config.seed;
  const std::size_t mtry = config.features_per_split == 0
                               ? default_features_per_split(m.cols)
                               : std::min<std::size_t>(config.features_per_split, m.cols);
  Rng rng(config.seed);
  for (unsigned t = 0; t < config.trees; ++t) {
    std::vector<std::size_t> sample(m.rows);
    if (config.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(uniform_index(rng, m.rows));
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    DecisionTree tree;
    detail::grow_tree(tree, m, std::move(sample), 0, config, mtry, rng);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline RandomForestModel train_random_forest(std::span<const FeatureRow> rows, const ForestConfig& config = {}) {
  auto model = train_random_forest(training_matrix(rows), config);
  model.training_meta.dataset_hash = rows_hash(rows);
  return model;
}

}  // namespace oocd
