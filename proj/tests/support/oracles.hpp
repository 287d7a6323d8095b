// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Test-only reference implementations. They share no code with the library
// paths they check: every candidate is scored by direct evaluation over the
// rows, with no sorting or prefix sums.

#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

namespace oocd::testkit {

struct OracleStump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = 1;
  double error = 0.0;
};

using Rows = std::vector<std::vector<double>>;

inline int oracle_predict(const OracleStump& s, const std::vector<double>& x) {
  return s.polarity * (x[s.feature] - s.threshold) > 0.0 ? 1 : -1;
}

/// Every feature, every threshold (below min, midpoints, above max) and both
/// polarities; minimum weighted error with ties resolved by enumeration order
/// (feature, threshold ascending, polarity +1 first) within a 1e-12 band.
inline OracleStump brute_force_stump(const Rows& x, const std::vector<int>& y, const std::vector<double>& w) {
  std::vector<OracleStump> all;
  double total = 0.0;
  for (double v : w) total += v;
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    std::set<double> values;
    for (const auto& r : x) values.insert(r[f]);
    std::vector<double> v(values.begin(), values.end());
    std::vector<double> thresholds{v.front() - 1.0};
    for (std::size_t j = 0; j + 1 < v.size(); ++j) thresholds.push_back((v[j] + v[j + 1]) / 2.0);
    thresholds.push_back(v.back() + 1.0);
    for (double t : thresholds) {
      for (int p : {1, -1}) {
        OracleStump s{f, t, p, 0.0};
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (oracle_predict(s, x[i]) != y[i]) s.error += w[i];
        }
        all.push_back(s);
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : all) best = std::min(best, s.error);
  for (const auto& s : all) {
    if (s.error <= best + 1e-12 * total) return s;
  }
  return all.front();
}

/// Depth-one Gini split over all features, leaves by majority (ties -> +1).
/// Ties between splits go to the lower feature, then the lower threshold.
struct OracleGiniStump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int left = -1;
  int right = 1;
};

inline std::optional<OracleGiniStump> gini_stump(const Rows& x, const std::vector<int>& y) {
  auto gini = [](const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    double pos = 0;
    for (int l : labels) pos += l > 0;
    const double p = pos / labels.size();
    return 2.0 * p * (1.0 - p);
  };
  auto majority = [](const std::vector<int>& labels) {
    int s = 0;
    for (int l : labels) s += l;
    return s >= 0 ? 1 : -1;
  };
  std::optional<OracleGiniStump> best;
  double best_imp = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < x[0].size(); ++f) {
    std::set<double> values;
    for (const auto& r : x) values.insert(r[f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      const double t = (v[j] + v[j + 1]) / 2.0;
      std::vector<int> l, r;
      for (std::size_t i = 0; i < x.size(); ++i) (x[i][f] <= t ? l : r).push_back(y[i]);
      const double imp = (l.size() * gini(l) + r.size() * gini(r)) / x.size();
      if (imp < best_imp - 1e-12) {
        best_imp = imp;
        best = OracleGiniStump{f, t, majority(l), majority(r)};
      }
    }
  }
  return best;
}

/// Straight-line discrete AdaBoost over brute_force_stump; returns the
/// per-round (stump, alpha) sequence.
struct OracleRound {
  OracleStump stump;
  double alpha;
};

inline std::vector<OracleRound> simulate_adaboost(const Rows& x, const std::vector<int>& y, unsigned rounds) {
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0 / n), ens(n, 0.0);
  std::vector<OracleRound> out;
  for (unsigned r = 0; r < rounds; ++r) {
    const auto s = brute_force_stump(x, y, w);
    if (s.error >= 0.5) break;
    const double eps = std::min(std::max(s.error, 1e-10), 1.0 - 1e-10);
    const double alpha = 0.5 * std::log((1.0 - eps) / eps);
    out.push_back({s, alpha});
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int h = oracle_predict(s, x[i]);
      w[i] *= std::exp(-alpha * y[i] * h);
      sum += w[i];
      ens[i] += alpha * h;
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= sum;
      wrong += ((ens[i] >= 0.0) ? 1 : -1) != y[i];
    }
    if (wrong == 0) break;
  }
  return out;
}

}  // namespace oocd::testkit
