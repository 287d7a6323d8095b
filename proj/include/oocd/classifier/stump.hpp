// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/error.hpp"

namespace oocd {

/// Depth-one threshold classifier. Predicts +1 when
/// polarity * (x[feature_index] - threshold) > 0, else -1.
struct Stump {
  std::size_t feature_index = 0;
  double threshold = 0.0;
  int polarity = 1;
  double alpha = 0.0;

  int predict(std::span<const double> x) const {
    return polarity * (x[feature_index] - threshold) > 0.0 ? 1 : -1;
  }

  friend bool operator==(const Stump&, const Stump&) = default;
};

struct StumpFit {
  Stump stump;
  /// Weighted error, summed in row order.
  double error = 0.0;
};

/// Relative width of the band in which two candidate errors count as tied.
inline constexpr double kStumpTieTolerance = 1e-12;

/// Candidate thresholds for one feature column: one below the minimum, the
/// midpoint of every pair of consecutive distinct values, one above the
/// maximum. `distinct` must be sorted and unique.
inline std::vector<double> stump_thresholds(std::span<const double> distinct) {
  std::vector<double> t;
  if (distinct.empty()) return t;
  t.reserve(distinct.size() + 1);
  const double lo = distinct.front();
  double below = lo - 1.0;
  if (!(below < lo)) below = std::nextafter(lo, -std::numeric_limits<double>::infinity());
  t.push_back(below);
  for (std::size_t j = 0; j + 1 < distinct.size(); ++j) t.push_back(std::midpoint(distinct[j], distinct[j + 1]));
  const double hi = distinct.back();
  double above = hi + 1.0;
  if (!(above > hi)) above = std::nextafter(hi, std::numeric_limits<double>::infinity());
  t.push_back(above);
  return t;
}

inline double stump_weighted_error(const TrainingMatrix& m, std::span<const double> w, const Stump& s) {
  double err = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (s.predict(m.row(i)) != m.y[i]) err += w[i];
  }
  return err;
}

/// Minimum weighted-error stump over every feature, candidate threshold and
/// polarity. Enumeration order is (feature, threshold ascending, polarity +1
/// then -1); among candidates whose error is within the tie band of the
/// minimum the first in that order wins, so the result does not depend on
/// row order.
inline StumpFit best_stump(const TrainingMatrix& m, std::span<const double> weights) {
  if (weights.size() != m.rows) throw Error("best_stump: one weight per row required");
  if (m.rows == 0) throw DegenerateData("best_stump: no rows");
  double total = 0.0, pos_total = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw Error("best_stump: weights must be finite and non-negative");
    total += weights[i];
    if (m.y[i] > 0) pos_total += weights[i];
  }
  if (!(total > 0.0)) throw Error("best_stump: weights must have a positive sum");
  if (m.single_class()) throw DegenerateData("best_stump: all rows share one label");
  const double neg_total = total - pos_total;

  struct Candidate {
    std::size_t feature;
    double threshold;
    int polarity;
    double error;
  };
  std::vector<Candidate> candidates;

  std::vector<std::size_t> order(m.rows);
  std::vector<double> distinct;
  std::vector<double> pos_prefix, neg_prefix;  // weight within the first k distinct values
  for (std::size_t f = 0; f < m.cols; ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return m.at(a, f) < m.at(b, f); });
    distinct.clear();
    pos_prefix.assign(1, 0.0);
    neg_prefix.assign(1, 0.0);
    for (auto i : order) {
      const double v = m.at(i, f);
      if (distinct.empty() || v != distinct.back()) {
        distinct.push_back(v);
        pos_prefix.push_back(pos_prefix.back());
        neg_prefix.push_back(neg_prefix.back());
      }
      (m.y[i] > 0 ? pos_prefix : neg_prefix).back() += weights[i];
    }
    const auto thresholds = stump_thresholds(distinct);
    for (const double t : thresholds) {
      // le: distinct values <= t (polarity +1 predicts -1 there);
      // lt: distinct values <  t (polarity -1 predicts +1 there).
      const auto le = static_cast<std::size_t>(std::ranges::upper_bound(distinct, t) - distinct.begin());
      const auto lt = static_cast<std::size_t>(std::ranges::lower_bound(distinct, t) - distinct.begin());
      const double err_plus = pos_prefix[le] + (neg_total - neg_prefix[le]);
      const double err_minus = (pos_total - pos_prefix[lt]) + neg_prefix[lt];
      candidates.push_back({f, t, 1, err_plus});
      candidates.push_back({f, t, -1, err_minus});
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::min(best, c.error);
  const double band = best + kStumpTieTolerance * total;
  for (const auto& c : candidates) {
    if (c.error <= band) {
      StumpFit fit;
      fit.stump = {c.feature, c.threshold, c.polarity, 0.0};
      fit.error = stump_weighted_error(m, weights, fit.stump);
      return fit;
    }
  }
  throw DegenerateData("best_stump: no candidate");  // unreachable with rows > 0
}

inline StumpFit best_stump(std::span<const FeatureRow> rows, std::span<const double> weights) {
  return best_stump(training_matrix(rows), weights);
}

}  // namespace oocd
