// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oocd/audit.hpp"
#include "oocd/cache.hpp"
#include "oocd/error.hpp"
#include "oocd/parallel.hpp"
#include "oocd/prompt.hpp"
#include "oocd/provider.hpp"

namespace oocd {

enum class FailurePolicy { Fail, Impute };

inline FailurePolicy failure_policy_from(std::string_view s) {
  if (s == "fail") return FailurePolicy::Fail;
  if (s == "impute") return FailurePolicy::Impute;
  throw ConfigError("unknown failure policy '" + std::string(s) + "' (expected fail|impute)");
}

struct ExtractionOptions {
  std::string model_id{kPinnedModel};
  double temperature = 0.0;
  /// Extra identical requests after a malformed or out-of-range answer.
  unsigned max_retries = 3;
  FailurePolicy policy = FailurePolicy::Fail;
};

struct GptExtraction {
  GptFeatureVector vector;
  bool imputed = false;
  unsigned provider_calls = 0;
  unsigned cache_hits = 0;
};

struct CaptionPair {
  std::string record_id;
  std::string caption1;
  std::string caption2;
};

/// Turns caption pairs into six-integer feature vectors through the cache
/// and provider. Shares nothing mutable except the cache, provider and audit
/// log, all of which are thread-safe.
class GptFeatureExtractor {
 public:
  GptFeatureExtractor(ChatProvider& provider, ResponseCache& cache, AuditLog& audit, ExtractionOptions options = {})
      : provider_(provider), cache_(cache), audit_(audit), options_(std::move(options)) {}

  GptExtraction extract(std::string_view record_id, std::string_view caption1, std::string_view caption2) {
    const auto prompt = render_prompt(caption1, caption2);
    GptExtraction result;
    std::string last_error;
    for (unsigned attempt = 0; attempt <= options_.max_retries; ++attempt) {
      CacheKey key{options_.model_id, options_.temperature, prompt, attempt};
      std::string raw;
      if (auto hit = cache_.lookup(key)) {
        ++result.cache_hits;
        audit_.emit(audit_event::kCacheHit, record_id, {{"key", hit->key}, {"attempt", attempt}});
        raw = hit->raw_response;
      } else {
        ++result.provider_calls;
        audit_.emit(audit_event::kProviderCall, record_id,
                    {{"key", key.hash()}, {"attempt", attempt}, {"provider", provider_.name()}});
        raw = provider_.complete({options_.model_id, options_.temperature, prompt, attempt});
        const auto status = status_of(raw);
        raw = cache_.insert(key, std::move(raw), status).raw_response;
      }
      try {
        result.vector = parse_feature_vector(raw);
        return result;
      } catch (const MalformedVector& e) {
        last_error = e.what();
      } catch (const OutOfRange& e) {
        last_error = e.what();
      }
      audit_.emit(audit_event::kParseFailure, record_id, {{"attempt", attempt}, {"error", last_error}});
    }
    if (options_.policy == FailurePolicy::Fail) throw ExtractionFailed(std::string(record_id), last_error);
    result.vector = GptFeatureVector::midpoint();
    result.imputed = true;
    audit_.emit(audit_event::kImputed, record_id,
                {{"vector", format_feature_vector(result.vector)}, {"last_error", last_error}});
    return result;
  }

  /// Extracts every pair with up to `concurrency` requests in flight. Output
  /// position i belongs to input position i.
  std::vector<GptExtraction> extract_all(const std::vector<CaptionPair>& pairs, std::size_t concurrency) {
    std::vector<GptExtraction> out(pairs.size());
    parallel_for(pairs.size(), concurrency, [&](std::size_t i) {
      out[i] = extract(pairs[i].record_id, pairs[i].caption1, pairs[i].caption2);
    });
    return out;
  }

  const ExtractionOptions& options() const noexcept { return options_; }

 private:
  static ParseStatus status_of(const std::string& raw) {
    try {
      parse_feature_vector(raw);
      return ParseStatus::Ok;
    } catch (const MalformedVector&) {
      return ParseStatus::MalformedVector;
    } catch (const OutOfRange&) {
      return ParseStatus::OutOfRange;
    }
  }

  ChatProvider& provider_;
  ResponseCache& cache_;
  AuditLog& audit_;
  ExtractionOptions options_;
};

}  // namespace oocd
