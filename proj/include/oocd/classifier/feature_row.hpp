// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/prompt.hpp"
#include "oocd/similarity.hpp"

namespace oocd {

enum class Feature : std::uint8_t { SBase, SLarge, C1, C2, C3, C4, C5, C6 };

inline constexpr std::size_t kFeatureCount = 8;
using FeatureOrder = std::array<Feature, kFeatureCount>;

/// [s_base, s_large, c1, c2, c3, c4, c5, c6]
inline constexpr FeatureOrder kCanonicalOrder = {Feature::SBase, Feature::SLarge, Feature::C1, Feature::C2,
                                                 Feature::C3,    Feature::C4,     Feature::C5, Feature::C6};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "s_base", "s_large", "c1", "c2", "c3", "c4", "c5", "c6"};

inline std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

inline Feature feature_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  throw Error("unknown feature name '" + std::string(name) + "'");
}

struct FeatureRow {
  std::string record_id;
  std::array<double, kFeatureCount> features{};
  std::optional<Label> label;
  FeatureOrder order = kCanonicalOrder;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

/// Concatenates similarity and provider features in canonical order, unscaled.
inline FeatureRow assemble_features(const SimilarityVector& sim, const GptFeatureVector& gpt, std::string id,
                                    std::optional<Label> label = std::nullopt) {
  FeatureRow row;
  row.record_id = std::move(id);
  row.features[0] = sim.s_base;
  row.features[1] = sim.s_large;
  for (std::size_t i = 0; i < 6; ++i) row.features[2 + i] = static_cast<double>(gpt.c[i]);
  row.label = label;
  return row;
}

/// Boosting-side label: OOC -> +1, NOOC -> -1.
inline int signed_label(Label l) { return l == Label::OOC ? 1 : -1; }
inline Label label_from_sign(int s) { return s > 0 ? Label::OOC : Label::NOOC; }

/// Dense row-major design matrix with +-1 labels.
struct TrainingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<int> y;

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {x.data() + r * cols, cols}; }

  void push_back(std::span<const double> values, int label) {
    if (rows == 0 && cols == 0) cols = values.size();
    if (values.size() != cols) throw Error("row width differs from matrix width");
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(label);
    ++rows;
  }

  bool single_class() const {
    for (auto v : y) {
      if (v != y.front()) return false;
    }
    return true;
  }
};

/// Training matrix from labeled rows; rejects unlabeled rows and rows whose
/// declared order differs from `order`.
inline TrainingMatrix training_matrix(std::span<const FeatureRow> rows, const FeatureOrder& order = kCanonicalOrder) {
  TrainingMatrix m;
  m.cols = kFeatureCount;
  for (const auto& r : rows) {
    if (r.order != order) throw FeatureOrderMismatch();
    if (!r.label) throw Error("training row '" + r.record_id + "' has no label");
    m.push_back(r.features, signed_label(*r.label));
  }
  return m;
}

/// Canonical content hash of a row set (ids, features, labels).
inline std::string rows_hash(std::span<const FeatureRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({r.record_id, r.features, r.label ? static_cast<int>(*r.label) : -1});
  }
  return sha256_hex(arr.dump());
}

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::string dataset_hash;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct Prediction {
  Label label = Label::NOOC;
  double margin = 0.0;
};

}  // namespace oocd
