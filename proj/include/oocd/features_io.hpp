// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Extracted-feature files. The first line is a header, then one line per
// dataset record in dataset order:
//
//   {"format": "oocd-features", "version": 1, "feature_order": ["s_base", ..., "c6"]}
//   {"id": "a", "label": 1, "features": [0.8, 0.7, 1, 1, 0, 2, 3, 1],
//    "similarity_source": "sidecar", "imputed": false}
//   {"id": "b", "label": 0, "gated": true, "iou_score": 0.1}
//
// Gated records were predicted NOOC by the coherence gate and carry no
// features. `label` is null for unlabeled records.

#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/similarity.hpp"

namespace oocd {

inline constexpr std::string_view kFeaturesFormat = "oocd-features";
inline constexpr int kFeaturesVersion = 1;

enum class Provenance { Gate, Classifier };

inline const char* provenance_name(Provenance p) { return p == Provenance::Gate ? "gate" : "classifier"; }

/// One dataset record after the gate and feature extraction.
struct ExtractedRecord {
  std::string id;
  std::optional<Label> label;
  Provenance provenance = Provenance::Classifier;
  std::optional<double> iou_score;
  /// Present iff provenance is Classifier.
  std::optional<FeatureRow> row;
  SimilaritySourceKind similarity_source = SimilaritySourceKind::LexicalFallback;
  bool imputed = false;

  friend bool operator==(const ExtractedRecord&, const ExtractedRecord&) = default;
};

/// Wraps bare feature rows (no gate involved) as extracted records.
inline std::vector<ExtractedRecord> records_from_rows(const std::vector<FeatureRow>& rows) {
  std::vector<ExtractedRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    ExtractedRecord e;
    e.id = r.record_id;
    e.label = r.label;
    e.row = r;
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string serialize_features(const std::vector<ExtractedRecord>& records,
                                      const FeatureOrder& order = kCanonicalOrder) {
  nlohmann::json header = {{"format", kFeaturesFormat}, {"version", kFeaturesVersion}};
  header["feature_order"] = nlohmann::json::array();
  for (auto f : order) header["feature_order"].push_back(feature_name(f));
  std::string out = header.dump() + "\n";
  for (const auto& r : records) {
    nlohmann::json j = {{"id", r.id}};
    j["label"] = r.label ? nlohmann::json(static_cast<int>(*r.label)) : nlohmann::json(nullptr);
    if (r.provenance == Provenance::Gate) {
      j["gated"] = true;
      if (r.iou_score) j["iou_score"] = *r.iou_score;
    } else {
      if (!r.row) throw Error("record '" + r.id + "' has no features");
      j["features"] = r.row->features;
      j["similarity_source"] = similarity_source_name(r.similarity_source);
      j["imputed"] = r.imputed;
      if (r.iou_score) j["iou_score"] = *r.iou_score;
    }
    out += j.dump() + "\n";
  }
  return out;
}

inline std::vector<ExtractedRecord> parse_features(std::string_view text) {
  std::vector<ExtractedRecord> out;
  std::unordered_set<std::string> seen;
  std::optional<FeatureOrder> order;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line;
    const auto body = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (body.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!order) {
        if (j.value("format", "") != kFeaturesFormat) throw MalformedRecord(line, "missing oocd-features header");
        if (j.value("version", 0) != kFeaturesVersion) throw MalformedRecord(line, "unsupported features version");
        const auto& names = j.at("feature_order");
        if (names.size() != kFeatureCount) throw MalformedRecord(line, "feature_order must list 8 features");
        FeatureOrder o{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) o[i] = feature_from_name(names[i].get<std::string>());
        order = o;
        continue;
      }
      ExtractedRecord r;
      r.id = j.at("id").get<std::string>();
      if (!seen.insert(r.id).second) throw MalformedRecord(line, "duplicate id '" + r.id + "'");
      if (const auto& l = j.at("label"); !l.is_null()) r.label = detail::parse_label(l, line);
      if (j.contains("iou_score") && !j["iou_score"].is_null()) r.iou_score = j["iou_score"].get<double>();
      if (j.value("gated", false)) {
        r.provenance = Provenance::Gate;
      } else {
        FeatureRow row;
        row.record_id = r.id;
        row.label = r.label;
        row.order = *order;
        const auto f = j.at("features").get<std::vector<double>>();
        if (f.size() != kFeatureCount) throw MalformedRecord(line, "features must have 8 values");
        std::copy(f.begin(), f.end(), row.features.begin());
        r.row = std::move(row);
        r.similarity_source = similarity_source_from(j.value("similarity_source", "lexical"));
        r.imputed = j.value("imputed", false);
      }
      out.push_back(std::move(r));
    } catch (const MalformedRecord&) {
      throw;
    } catch (const std::exception& e) {
      throw MalformedRecord(line, e.what());
    }
  }
  if (!order) throw MalformedRecord(1, "empty features file");
  return out;
}

inline std::vector<ExtractedRecord> load_features(const std::filesystem::path& path) {
  return parse_features(read_file(path));
}

}  // namespace oocd
