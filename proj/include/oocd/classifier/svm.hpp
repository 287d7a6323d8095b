// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Linear SVM trained by primal subgradient descent on the L2-regularised
// hinge loss (Pegasos step size 1/(lambda t), projection onto the ball of
// radius 1/sqrt(lambda)). Features are standardised with training-set
// statistics that travel with the model. The bias is an extra constant input
// and is regularised with the weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/error.hpp"
#include "oocd/random.hpp"

namespace oocd {

struct SvmConfig {
  double lambda = 1e-3;
  unsigned epochs = 200;
  std::uint64_t seed = 0;
  Label zero_margin_label = Label::OOC;
};

struct LinearSvmModel {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 for constant columns
  std::vector<double> weights;
  double bias = 0.0;
  SvmConfig config;
  FeatureOrder feature_order = kCanonicalOrder;
  TrainingMeta training_meta;

  double margin(std::span<const double> x) const {
    double s = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * ((x[j] - mean[j]) / scale[j]);
    return s;
  }

  Prediction predict(const FeatureRow& row) const {
    if (row.order != feature_order) throw FeatureOrderMismatch();
    const double m = margin(row.features);
    return {m > 0.0 ? Label::OOC : (m < 0.0 ? Label::NOOC : config.zero_margin_label), m};
  }
};

inline LinearSvmModel train_linear_svm(const TrainingMatrix& m, const SvmConfig& config = {}) {
  if (m.rows < 2) throw DegenerateData("svm: need at least 2 rows");
  if (m.single_class()) throw DegenerateData("svm: both labels must be present");
  if (!(config.lambda > 0.0)) throw ConfigError("svm: lambda must be positive");

  const std::size_t n = m.rows, d = m.cols;
  LinearSvmModel model;
  model.config = config;
  model.training_meta.seed = config.seed;
  model.mean.assign(d, 0.0);
  model.scale.assign(d, 1.0);
  model.weights.assign(d, 0.0);

  bool any_variation = false;
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += m.at(i, j);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (m.at(i, j) - mu) * (m.at(i, j) - mu);
    var /= static_cast<double>(n);
    model.mean[j] = mu;
    const double sd = std::sqrt(var);
    if (sd > 1e-12) {
      model.scale[j] = sd;
      any_variation = true;
    }
  }

  if (!any_variation) {
    // Identical rows: the best hinge solution is the majority class.
    std::ptrdiff_t balance = 0;
    for (auto y : m.y) balance += y;
    model.bias = balance > 0 ? 1.0 : (balance < 0 ? -1.0 : signed_label(config.zero_margin_label));
    return model;
  }

  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[i * d + j] = (m.at(i, j) - model.mean[j]) / model.scale[j];
  }

  const double radius = 1.0 / std::sqrt(config.lambda);
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  std::uint64_t t = 0;
  for (unsigned epoch = 0; epoch < config.epochs; ++epoch) {
    fisher_yates(std::span<std::size_t>(order), rng);
    for (const auto i : order) {
      ++t;
      const double eta = 1.0 / (config.lambda * static_cast<double>(t));
      const double* zi = z.data() + i * d;
      double score = b;
      for (std::size_t j = 0; j < d; ++j) score += w[j] * zi[j];
      const double shrink = 1.0 - eta * config.lambda;
      for (auto& wj : w) wj *= shrink;
      b *= shrink;
      if (m.y[i] * score < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * m.y[i] * zi[j];
        b += eta * m.y[i];
      }
      double norm2 = b * b;
      for (auto wj : w) norm2 += wj * wj;
      if (norm2 > radius * radius) {
        const double f = radius / std::sqrt(norm2);
        for (auto& wj : w) wj *= f;
        b *= f;
      }
    }
  }
  model.weights = std::move(w);
  model.bias = b;
  return model;
}

inline LinearSvmModel train_linear_svm(std::span<const FeatureRow> rows, const SvmConfig& config = {}) {
  auto model = train_linear_svm(training_matrix(rows), config);
  model.training_meta.dataset_hash = rows_hash(rows);
  return model;
}

}  // namespace oocd
