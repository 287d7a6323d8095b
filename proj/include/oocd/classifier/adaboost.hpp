// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Discrete two-class AdaBoost over decision stumps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/classifier/stump.hpp"
#include "oocd/error.hpp"

namespace oocd {

struct AdaBoostConfig {
  unsigned rounds = 50;
  double learning_rate = 1.0;
  /// Label for a zero ensemble margin.
  Label zero_margin_label = Label::OOC;
};

inline constexpr double kErrorClamp = 1e-10;

struct AdaBoostModel {
  std::vector<Stump> stumps;
  unsigned rounds = 0;  // configured round budget
  double learning_rate = 1.0;
  FeatureOrder feature_order = kCanonicalOrder;
  Label zero_margin_label = Label::OOC;
  TrainingMeta training_meta;

  double margin(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& st : stumps) s += st.alpha * st.predict(x);
    return s;
  }

  Prediction predict(const FeatureRow& row) const {
    if (row.order != feature_order) throw FeatureOrderMismatch();
    const double m = margin(row.features);
    return {m > 0.0 ? Label::OOC : (m < 0.0 ? Label::NOOC : zero_margin_label), m};
  }
};

/// Per-round record of the boosting loop, for invariant checks and reports.
struct BoostRound {
  StumpFit fit;
  /// Unclamped weighted error of the round's stump under the round's weights.
  double error = 0.0;
  double alpha = 0.0;
  bool accepted = false;
  /// After reweighting and renormalising (accepted rounds only).
  double weight_sum = 0.0;
  double misclassified_mass = 0.0;
  double training_error = 0.0;  // ensemble, unweighted
};

inline AdaBoostModel train_adaboost(const TrainingMatrix& m, const AdaBoostConfig& config = {},
                                    std::vector<BoostRound>* trace = nullptr) {
  if (m.rows < 2) throw DegenerateData("adaboost: need at least 2 rows");
  if (m.single_class()) throw DegenerateData("adaboost: both labels must be present");
  if (!(config.learning_rate > 0.0)) throw ConfigError("adaboost: learning rate must be positive");

  AdaBoostModel model;
  model.rounds = config.rounds;
  model.learning_rate = config.learning_rate;
  model.zero_margin_label = config.zero_margin_label;

  const std::size_t n = m.rows;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<double> ensemble(n, 0.0);
  std::vector<int> h(n);

  for (unsigned round = 0; round < config.rounds; ++round) {
    BoostRound rec;
    rec.fit = best_stump(m, w);
    rec.error = rec.fit.error;
    if (rec.error >= 0.5) {
      if (trace) trace->push_back(rec);
      break;
    }
    const double eps = std::clamp(rec.error, kErrorClamp, 1.0 - kErrorClamp);
    rec.alpha = config.learning_rate * 0.5 * std::log((1.0 - eps) / eps);
    rec.accepted = true;

    Stump st = rec.fit.stump;
    st.alpha = rec.alpha;
    model.stumps.push_back(st);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = st.predict(m.row(i));
      w[i] *= std::exp(-rec.alpha * m.y[i] * h[i]);
      sum += w[i];
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= sum;
      rec.weight_sum += w[i];
      if (h[i] != m.y[i]) rec.misclassified_mass += w[i];
      ensemble[i] += rec.alpha * h[i];
      const int pred = ensemble[i] > 0.0 ? 1 : (ensemble[i] < 0.0 ? -1 : signed_label(config.zero_margin_label));
      if (pred != m.y[i]) ++wrong;
    }
    rec.training_error = static_cast<double>(wrong) / static_cast<double>(n);
    if (trace) trace->push_back(rec);
    if (wrong == 0) break;
  }
  return model;
}

inline AdaBoostModel train_adaboost(std::span<const FeatureRow> rows, const AdaBoostConfig& config = {},
                                    std::vector<BoostRound>* trace = nullptr) {
  auto model = train_adaboost(training_matrix(rows), config, trace);
  model.training_meta.dataset_hash = rows_hash(rows);
  return model;
}

}  // namespace oocd
