// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configuration. Sources merge with precedence
// flags > environment > config file > defaults; each layer is a JSON merge
// patch over the one below. See docs/config.md for the file layout.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "oocd/classifier/model.hpp"
#include "oocd/error.hpp"
#include "oocd/gate.hpp"
#include "oocd/gpt_features.hpp"
#include "oocd/provider.hpp"
#include "oocd/similarity.hpp"

namespace oocd {

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

inline std::optional<std::string> process_env(std::string_view name) {
  if (const char* v = std::getenv(std::string(name).c_str())) return std::string(v);
  return std::nullopt;
}

inline nlohmann::json default_config() {
  return nlohmann::json::parse(R"({
    "seed": 0,
    "audit_log": "",
    "gate": {"iou_threshold": 0.25},
    "provider": {
      "kind": "stub",
      "endpoint": "https://api.openai.com/v1/chat/completions",
      "model": "gpt-3.5-turbo-0301",
      "temperature": 0.0,
      "api_key": "",
      "max_retries": 3,
      "requests_per_minute": 60,
      "timeout_ms": 30000,
      "fixture": "",
      "replication_mode": true
    },
    "extraction": {"retries": 3, "failure_policy": "fail", "cache_dir": "", "concurrency": 1},
    "similarity": {"source": "lexical", "endpoint": "http://127.0.0.1:8765", "file": "", "allow_mixed_sources": false},
    "classifier": {"kind": "adaboost", "rounds": 50, "learning_rate": 1.0, "trees": 100, "max_depth": 4,
                   "features_per_split": 0, "lambda": 0.001, "epochs": 200},
    "split": {"seed": null, "train_fraction": 0.5, "stratify": false}
  })");
}

/// Environment layer. OOCD_API_KEY is the only variable the live provider
/// strictly needs; the rest are conveniences.
inline nlohmann::json env_patch(const EnvLookup& env) {
  nlohmann::json p = nlohmann::json::object();
  auto str = [&](std::string_view var, const nlohmann::json::json_pointer& ptr) {
    if (auto v = env(var)) p[ptr] = *v;
  };
  str(kApiKeyVariable, "/provider/api_key"_json_pointer);
  str("OOCD_ENDPOINT", "/provider/endpoint"_json_pointer);
  str("OOCD_MODEL", "/provider/model"_json_pointer);
  str("OOCD_PROVIDER", "/provider/kind"_json_pointer);
  str("OOCD_CACHE_DIR", "/extraction/cache_dir"_json_pointer);
  str("OOCD_SIMILARITY_ENDPOINT", "/similarity/endpoint"_json_pointer);
  if (auto v = env("OOCD_SEED")) {
    try {
      p["seed"] = std::stoull(*v);
    } catch (const std::exception&) {
      throw ConfigError("OOCD_SEED must be an unsigned integer");
    }
  }
  return p;
}

struct RunConfig {
  std::uint64_t seed = 0;
  std::string audit_log;
  GateConfig gate;
  std::string provider_kind = "stub";
  ProviderConfig provider;
  std::string fixture_path;
  ExtractionOptions extraction;
  std::string cache_dir;
  std::size_t concurrency = 1;
  SimilaritySourceKind similarity_source = SimilaritySourceKind::LexicalFallback;
  std::string similarity_endpoint;
  std::string similarity_file;
  bool allow_mixed_sources = false;
  ClassifierConfig classifier;
  SplitSpec split;
  nlohmann::json resolved;  // merged JSON, api key redacted

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      c.seed = j.at("seed").get<std::uint64_t>();
      c.audit_log = j.at("audit_log").get<std::string>();
      c.gate.threshold = j.at("/gate/iou_threshold"_json_pointer).get<double>();
      c.gate.validate();

      const auto& p = j.at("provider");
      c.provider_kind = p.at("kind").get<std::string>();
      c.provider.endpoint_url = p.at("endpoint").get<std::string>();
      c.provider.model_id = p.at("model").get<std::string>();
      c.provider.temperature = p.at("temperature").get<double>();
      c.provider.api_key = p.at("api_key").get<std::string>();
      c.provider.max_retries = p.at("max_retries").get<int>();
      c.provider.requests_per_minute = p.at("requests_per_minute").get<int>();
      c.provider.timeout = std::chrono::milliseconds(p.at("timeout_ms").get<std::int64_t>());
      c.provider.replication_mode = p.at("replication_mode").get<bool>();
      c.fixture_path = p.at("fixture").get<std::string>();
      c.provider.validate();

      const auto& e = j.at("extraction");
      c.extraction.model_id = c.provider.model_id;
      c.extraction.temperature = c.provider.temperature;
      c.extraction.max_retries = e.at("retries").get<unsigned>();
      c.extraction.policy = failure_policy_from(e.at("failure_policy").get<std::string>());
      c.cache_dir = e.at("cache_dir").get<std::string>();
      c.concurrency = e.at("concurrency").get<std::size_t>();
      if (c.concurrency == 0) throw ConfigError("concurrency must be at least 1");

      const auto& s = j.at("similarity");
      c.similarity_source = similarity_source_from(s.at("source").get<std::string>());
      c.similarity_endpoint = s.at("endpoint").get<std::string>();
      c.similarity_file = s.at("file").get<std::string>();
      c.allow_mixed_sources = s.at("allow_mixed_sources").get<bool>();

      const auto& k = j.at("classifier");
      c.classifier.kind = classifier_from(k.at("kind").get<std::string>());
      c.classifier.adaboost.rounds = k.at("rounds").get<unsigned>();
      c.classifier.adaboost.learning_rate = k.at("learning_rate").get<double>();
      c.classifier.forest.trees = k.at("trees").get<unsigned>();
      c.classifier.forest.max_depth = k.at("max_depth").get<unsigned>();
      c.classifier.forest.features_per_split = k.at("features_per_split").get<unsigned>();
      c.classifier.forest.seed = c.seed;
      c.classifier.svm.lambda = k.at("lambda").get<double>();
      c.classifier.svm.epochs = k.at("epochs").get<unsigned>();
      c.classifier.svm.seed = c.seed;

      const auto& split_seed = j.at("/split/seed"_json_pointer);
      c.split.seed = split_seed.is_null() ? c.seed : split_seed.get<std::uint64_t>();
      c.split.train_fraction = j.at("/split/train_fraction"_json_pointer).get<double>();
      c.split.stratify = j.at("/split/stratify"_json_pointer).get<bool>();
    } catch (const nlohmann::json::exception& ex) {
      throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
    c.resolved = j;
    if (!c.provider.api_key.empty()) c.resolved["provider"]["api_key"] = "<redacted>";
    return c;
  }
};

/// Merges defaults, the config file (if any), the environment and flag
/// overrides, in increasing precedence.
inline RunConfig resolve_config(const std::optional<nlohmann::json>& file, const EnvLookup& env,
                                const nlohmann::json& flags) {
  auto merged = default_config();
  if (file) {
    if (!file->is_object()) throw ConfigError("config file must hold a JSON object");
    merged.merge_patch(*file);
  }
  merged.merge_patch(env_patch(env));
  merged.merge_patch(flags);
  return RunConfig::from_json(merged);
}

inline std::optional<nlohmann::json> load_config_file(const std::string& path) {
  if (path.empty()) return std::nullopt;
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace oocd
