// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Triplet datasets: one JSON object per line.
//
//   {"id": "17", "image_path": "img/17.jpg", "caption1": "...", "caption2": "...",
//    "iou_score": 0.41, "label": 1}
//
// `iou_score` may be absent or null. `label` is 0/1 or "NOOC"/"OOC" and may be
// absent for prediction-only data. Unknown keys are ignored. Lines in the
// challenge's public-test layout (img_local_path, context_label, no id) are
// mapped onto the native fields; their id becomes the 1-based line number.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oocd/error.hpp"
#include "oocd/random.hpp"
#include "oocd/util.hpp"

namespace oocd {

enum class Label : int { NOOC = 0, OOC = 1 };

inline const char* label_name(Label l) { return l == Label::OOC ? "OOC" : "NOOC"; }

struct TripletRecord {
  std::string id;
  std::string image_path;
  std::string caption1;
  std::string caption2;
  std::optional<double> iou_score;
  std::optional<Label> label;

  friend bool operator==(const TripletRecord&, const TripletRecord&) = default;
};

struct Dataset {
  std::vector<TripletRecord> records;
  std::string source_path;

  std::size_t size() const noexcept { return records.size(); }
  std::size_t labeled_count() const {
    return static_cast<std::size_t>(std::ranges::count_if(
        records, [](const TripletRecord& r) { return r.label.has_value(); }));
  }
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  /// Shuffle and cut each label class separately.
  bool stratify = false;
};

struct Fold {
  Dataset train;
  Dataset validation;
};

namespace detail {

inline std::string record_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw MalformedRecord(line, std::string("missing ") + key);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw MalformedRecord(line, std::string(key) + " must be a string");
}

inline std::optional<Label> parse_label(const nlohmann::json& v, std::size_t line) {
  if (v.is_null()) return std::nullopt;
  if (v.is_number_integer()) {
    const auto n = v.get<long long>();
    if (n == 0) return Label::NOOC;
    if (n == 1) return Label::OOC;
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "NOOC" || s == "0") return Label::NOOC;
    if (s == "OOC" || s == "1") return Label::OOC;
  }
  throw MalformedRecord(line, "label must be 0, 1, \"NOOC\" or \"OOC\"");
}

}  // namespace detail

/// Parses one dataset line. `line` is 1-based and only used for errors.
inline TripletRecord parse_record(std::string_view text, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw MalformedRecord(line, "record is not an object");

  const bool challenge_layout = !obj.contains("id") && obj.contains("img_local_path");

  TripletRecord r;
  if (challenge_layout) {
    r.id = std::to_string(line);
    r.image_path = detail::record_string(obj, "img_local_path", line);
  } else {
    r.id = detail::record_string(obj, "id", line);
    if (r.id.empty()) throw MalformedRecord(line, "empty id");
    r.image_path = obj.contains("image_path") ? detail::record_string(obj, "image_path", line) : "";
  }
  r.caption1 = detail::record_string(obj, "caption1", line);
  r.caption2 = detail::record_string(obj, "caption2", line);
  if (trim(r.caption1).empty()) throw MalformedRecord(line, "empty caption1");
  if (trim(r.caption2).empty()) throw MalformedRecord(line, "empty caption2");

  if (auto it = obj.find("iou_score"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) throw MalformedRecord(line, "iou_score must be a number");
    const double v = it->get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw MalformedRecord(line, "iou_score outside [0,1]");
    r.iou_score = v;
  }

  const char* label_key = challenge_layout ? "context_label" : "label";
  if (auto it = obj.find(label_key); it != obj.end()) r.label = detail::parse_label(*it, line);
  return r;
}

inline Dataset parse_dataset(std::string_view content, std::string source_path = {}) {
  Dataset ds;
  ds.source_path = std::move(source_path);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    ++line_no;
    const auto line = trim(content.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    auto rec = parse_record(line, line_no);
    if (!seen.insert(rec.id).second) throw MalformedRecord(line_no, "duplicate id '" + rec.id + "'");
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw FileNotFound(path.string());
  return parse_dataset(read_file(path), path.string());
}

/// Canonical single-line encoding of a record (native layout).
inline nlohmann::json record_to_json(const TripletRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"image_path", r.image_path},
                      {"caption1", r.caption1},
                      {"caption2", r.caption2}};
  j["iou_score"] = r.iou_score ? nlohmann::json(*r.iou_score) : nlohmann::json(nullptr);
  if (r.label) j["label"] = static_cast<int>(*r.label);
  return j;
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& r : ds.records) out += record_to_json(r).dump() + "\n";
  return out;
}

/// Content hash of a dataset's canonical encoding; stable across reloads.
inline std::string dataset_hash(const Dataset& ds) { return sha256_hex(serialize_dataset(ds)); }

namespace detail {

inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.source_path = ds.source_path;
  out.records.reserve(idx.size());
  for (auto i : idx) out.records.push_back(ds.records[i]);
  return out;
}

inline std::size_t ceil_fraction(std::size_t n, double fraction) {
  return std::min(n, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-9)));
}

}  // namespace detail

/// Seeded shuffle, then the first ceil(n * train_fraction) records train and
/// the rest test. Both halves keep shuffled order.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0,1)");
  }
  if (ds.labeled_count() < 2) throw TooFewRecords("split needs at least 2 labeled records");

  std::vector<std::size_t> train_idx, test_idx;
  if (!spec.stratify) {
    const auto order = shuffled_indices(ds.size(), spec.seed);
    const auto cut = detail::ceil_fraction(order.size(), spec.train_fraction);
    train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  } else {
    // Groups: NOOC, OOC, unlabeled. Each gets its own seeded shuffle.
    std::vector<std::size_t> groups[3];
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& l = ds.records[i].label;
      groups[l ? static_cast<int>(*l) : 2].push_back(i);
    }
    for (std::size_t g = 0; g < 3; ++g) {
      const auto perm = shuffled_indices(groups[g].size(), spec.seed + g);
      const auto cut = detail::ceil_fraction(perm.size(), spec.train_fraction);
      for (std::size_t p = 0; p < perm.size(); ++p) {
        (p < cut ? train_idx : test_idx).push_back(groups[g][perm[p]]);
      }
    }
  }
  return {detail::subset(ds, train_idx), detail::subset(ds, test_idx)};
}

/// Validation index sets for k-fold cross-validation over n items: contiguous
/// chunks of a seeded permutation, the first n mod k chunks one item larger.
inline std::vector<std::vector<std::size_t>> cv_fold_indices(std::size_t n, std::size_t k,
                                                             std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be positive");
  if (n < k) throw TooFewRecords("need at least k records for k folds");
  const auto order = shuffled_indices(n, seed);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::vector<std::vector<std::size_t>> folds;
  folds.reserve(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(start + len));
    start += len;
  }
  return folds;
}

/// Complement of `validation` within 0..n-1, ascending.
inline std::vector<std::size_t> complement_indices(std::size_t n,
                                                   const std::vector<std::size_t>& validation) {
  std::vector<bool> taken(n, false);
  for (auto i : validation) taken[i] = true;
  std::vector<std::size_t> rest;
  rest.reserve(n - validation.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) rest.push_back(i);
  }
  return rest;
}

/// k (train, validation) pairs. Train sets keep file order.
inline std::vector<Fold> make_cv_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be positive");
  if (ds.labeled_count() < k) throw TooFewRecords("need at least k labeled records for k folds");
  std::vector<Fold> folds;
  for (const auto& val : cv_fold_indices(ds.size(), k, seed)) {
    folds.push_back({detail::subset(ds, complement_indices(ds.size(), val)), detail::subset(ds, val)});
  }
  return folds;
}

}  // namespace oocd
