// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Classifier kinds behind one value type, plus the model file format.
//
// Model files are JSON:
//   {"format": "oocd-model", "version": 1, "kind": "adaboost" | "rf" | "svm",
//    "feature_order": ["s_base", ..., "c6"], "zero_margin_label": "OOC",
//    "training_meta": {"seed": S, "dataset_hash": "..."},
//    "params": { kind-specific }}
// Numbers are written in shortest round-trip form, so a loaded model
// reproduces the saved model's predictions bit for bit.

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "oocd/classifier/adaboost.hpp"
#include "oocd/classifier/feature_row.hpp"
#include "oocd/classifier/forest.hpp"
#include "oocd/classifier/svm.hpp"
#include "oocd/error.hpp"
#include "oocd/util.hpp"

namespace oocd {

inline constexpr std::string_view kModelFormat = "oocd-model";
inline constexpr int kModelVersion = 1;

enum class ClassifierKind { AdaBoost, RandomForest, LinearSvm };

inline const char* classifier_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::AdaBoost: return "adaboost";
    case ClassifierKind::RandomForest: return "rf";
    case ClassifierKind::LinearSvm: return "svm";
  }
  return "adaboost";
}

/// Table-style method label, e.g. "GPT+AdaBoost".
inline const char* classifier_display_name(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::AdaBoost: return "GPT+AdaBoost";
    case ClassifierKind::RandomForest: return "GPT+RF";
    case ClassifierKind::LinearSvm: return "GPT+SVM";
  }
  return "GPT+AdaBoost";
}

inline ClassifierKind classifier_from(std::string_view s) {
  if (s == "adaboost") return ClassifierKind::AdaBoost;
  if (s == "rf") return ClassifierKind::RandomForest;
  if (s == "svm") return ClassifierKind::LinearSvm;
  throw ConfigError("unknown classifier '" + std::string(s) + "' (expected adaboost|rf|svm)");
}

using Model = std::variant<AdaBoostModel, RandomForestModel, LinearSvmModel>;

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::AdaBoost;
  AdaBoostConfig adaboost;
  ForestConfig forest;
  SvmConfig svm;
};

inline ClassifierKind model_kind(const Model& m) { return static_cast<ClassifierKind>(m.index()); }

inline Model train_model(std::span<const FeatureRow> rows, const ClassifierConfig& cfg) {
  switch (cfg.kind) {
    case ClassifierKind::AdaBoost: return train_adaboost(rows, cfg.adaboost);
    case ClassifierKind::RandomForest: return train_random_forest(rows, cfg.forest);
    case ClassifierKind::LinearSvm: return train_linear_svm(rows, cfg.svm);
  }
  throw ConfigError("unknown classifier kind");
}

inline Prediction predict(const Model& model, const FeatureRow& row) {
  return std::visit([&](const auto& m) { return m.predict(row); }, model);
}

namespace detail {

inline nlohmann::json order_to_json(const FeatureOrder& order) {
  auto j = nlohmann::json::array();
  for (auto f : order) j.push_back(feature_name(f));
  return j;
}

inline FeatureOrder order_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kFeatureCount) throw CorruptModel("feature_order must list 8 features");
  FeatureOrder order{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) order[i] = feature_from_name(j[i].get<std::string>());
  return order;
}

inline Label label_from_name(const std::string& s) {
  if (s == "OOC") return Label::OOC;
  if (s == "NOOC") return Label::NOOC;
  throw CorruptModel("bad label '" + s + "'");
}

inline double finite(const nlohmann::json& j) {
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw CorruptModel("non-finite parameter");
  return v;
}

inline std::vector<double> finite_vector(const nlohmann::json& j, std::size_t expected) {
  if (!j.is_array() || j.size() != expected) throw CorruptModel("parameter vector has wrong length");
  std::vector<double> v;
  for (const auto& e : j) v.push_back(finite(e));
  return v;
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = classifier_name(model_kind(model));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        j["feature_order"] = detail::order_to_json(m.feature_order);
        j["training_meta"] = {{"seed", m.training_meta.seed}, {"dataset_hash", m.training_meta.dataset_hash}};
        nlohmann::json p;
        if constexpr (std::is_same_v<T, AdaBoostModel>) {
          j["zero_margin_label"] = label_name(m.zero_margin_label);
          p["rounds"] = m.rounds;
          p["learning_rate"] = m.learning_rate;
          p["stumps"] = nlohmann::json::array();
          for (const auto& s : m.stumps) {
            p["stumps"].push_back(
                {{"feature", s.feature_index}, {"threshold", s.threshold}, {"polarity", s.polarity}, {"alpha", s.alpha}});
          }
        } else if constexpr (std::is_same_v<T, RandomForestModel>) {
          j["zero_margin_label"] = label_name(m.config.zero_margin_label);
          p["trees"] = m.config.trees;
          p["max_depth"] = m.config.max_depth;
          p["features_per_split"] = m.config.features_per_split;
          p["bootstrap"] = m.config.bootstrap;
          p["seed"] = m.config.seed;
          p["forest"] = nlohmann::json::array();
          for (const auto& t : m.trees) {
            auto nodes = nlohmann::json::array();
            for (const auto& n : t.nodes) {
              nodes.push_back({n.feature, n.threshold, n.left, n.right, static_cast<int>(n.leaf_label)});
            }
            p["forest"].push_back(std::move(nodes));
          }
        } else {
          j["zero_margin_label"] = label_name(m.config.zero_margin_label);
          p["lambda"] = m.config.lambda;
          p["epochs"] = m.config.epochs;
          p["seed"] = m.config.seed;
          p["mean"] = m.mean;
          p["scale"] = m.scale;
          p["weights"] = m.weights;
          p["bias"] = m.bias;
        }
        j["params"] = std::move(p);
      },
      model);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kModelFormat) throw CorruptModel("not an oocd model file");
  if (!j.contains("version") || !j["version"].is_number_integer()) throw CorruptModel("missing version tag");
  if (j["version"].get<int>() != kModelVersion) {
    throw UnsupportedVersion("model version " + j["version"].dump() + " is not supported (expected " +
                             std::to_string(kModelVersion) + ")");
  }
  try {
    const auto kind = classifier_from(j.at("kind").get<std::string>());
    const auto order = detail::order_from_json(j.at("feature_order"));
    const auto zero = detail::label_from_name(j.at("zero_margin_label").get<std::string>());
    TrainingMeta meta{j.at("training_meta").at("seed").get<std::uint64_t>(),
                      j.at("training_meta").at("dataset_hash").get<std::string>()};
    const auto& p = j.at("params");
    switch (kind) {
      case ClassifierKind::AdaBoost: {
        AdaBoostModel m;
        m.feature_order = order;
        m.zero_margin_label = zero;
        m.training_meta = meta;
        m.rounds = p.at("rounds").get<unsigned>();
        m.learning_rate = detail::finite(p.at("learning_rate"));
        for (const auto& s : p.at("stumps")) {
          Stump st;
          st.feature_index = s.at("feature").get<std::size_t>();
          st.threshold = detail::finite(s.at("threshold"));
          st.polarity = s.at("polarity").get<int>();
          st.alpha = detail::finite(s.at("alpha"));
          if (st.feature_index >= kFeatureCount) throw CorruptModel("stump feature index out of range");
          if (st.polarity != 1 && st.polarity != -1) throw CorruptModel("stump polarity must be +1 or -1");
          m.stumps.push_back(st);
        }
        if (m.stumps.empty()) throw CorruptModel("adaboost model has no stumps");
        return m;
      }
      case ClassifierKind::RandomForest: {
        RandomForestModel m;
        m.feature_order = order;
        m.training_meta = meta;
        m.config.zero_margin_label = zero;
        m.config.trees = p.at("trees").get<unsigned>();
        m.config.max_depth = p.at("max_depth").get<unsigned>();
        m.config.features_per_split = p.at("features_per_split").get<unsigned>();
        m.config.bootstrap = p.at("bootstrap").get<bool>();
        m.config.seed = p.at("seed").get<std::uint64_t>();
        for (const auto& t : p.at("forest")) {
          DecisionTree tree;
          for (const auto& n : t) {
            if (!n.is_array() || n.size() != 5) throw CorruptModel("tree node must have 5 fields");
            TreeNode node;
            node.feature = n[0].get<int>();
            node.threshold = detail::finite(n[1]);
            node.left = n[2].get<int>();
            node.right = n[3].get<int>();
            const int leaf = n[4].get<int>();
            if (leaf != 0 && leaf != 1) throw CorruptModel("leaf label must be 0 or 1");
            node.leaf_label = static_cast<Label>(leaf);
            tree.nodes.push_back(node);
          }
          const int count = static_cast<int>(tree.nodes.size());
          if (count == 0) throw CorruptModel("empty tree");
          for (int i = 0; i < count; ++i) {
            const auto& node = tree.nodes[i];
            if (node.feature < 0) continue;
            // Children always follow their parent, which rules out cycles.
            if (node.feature >= static_cast<int>(kFeatureCount) || node.left <= i || node.right <= i ||
                node.left >= count || node.right >= count) {
              throw CorruptModel("malformed tree structure");
            }
          }
          m.trees.push_back(std::move(tree));
        }
        if (m.trees.empty() || m.trees.size() != m.config.trees) throw CorruptModel("forest tree count mismatch");
        return m;
      }
      case ClassifierKind::LinearSvm: {
        LinearSvmModel m;
        m.feature_order = order;
        m.training_meta = meta;
        m.config.zero_margin_label = zero;
        m.config.lambda = detail::finite(p.at("lambda"));
        m.config.epochs = p.at("epochs").get<unsigned>();
        m.config.seed = p.at("seed").get<std::uint64_t>();
        m.mean = detail::finite_vector(p.at("mean"), kFeatureCount);
        m.scale = detail::finite_vector(p.at("scale"), kFeatureCount);
        m.weights = detail::finite_vector(p.at("weights"), kFeatureCount);
        m.bias = detail::finite(p.at("bias"));
        for (auto s : m.scale) {
          if (!(s > 0.0)) throw CorruptModel("svm scale must be positive");
        }
        return m;
      }
    }
  } catch (const CorruptModel&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptModel(std::string("invalid model: ") + e.what());
  }
  throw CorruptModel("unknown classifier kind");
}

inline std::string serialize_model(const Model& model) { return model_to_json(model).dump(2) + "\n"; }

inline Model deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CorruptModel(std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

inline Model load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace oocd
