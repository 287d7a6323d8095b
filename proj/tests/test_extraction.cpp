// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>

#include "oocd/gpt_features.hpp"
#include "support/helpers.hpp"

using namespace oocd;

namespace {

ExtractionOptions opts(FailurePolicy p = FailurePolicy::Fail) {
  ExtractionOptions o;
  o.policy = p;
  return o;
}

}  // namespace

TEST(Cache, KeyDependsOnEveryField) {
  const CacheKey base{"m-0301", 0.0, "p", 0};
  auto other = base;
  other.prompt = "q";
  EXPECT_NE(base.hash(), other.hash());
  other = base;
  other.model_id = "m-0302";
  EXPECT_NE(base.hash(), other.hash());
  other = base;
  other.temperature = 0.5;
  EXPECT_NE(base.hash(), other.hash());
  other = base;
  other.attempt = 1;
  EXPECT_NE(base.hash(), other.hash());
  EXPECT_EQ(base.hash().size(), 64u);
}

TEST(Cache, AppendOnly) {
  testkit::TempDir dir;
  ResponseCache cache(dir.path());
  const CacheKey k{"m-0301", 0.0, "p", 0};
  cache.insert(k, "[1, 1, 1, 1, 1, 1]", ParseStatus::Ok);
  const auto second = cache.insert(k, "[2, 2, 2, 2, 2, 2]", ParseStatus::Ok);
  EXPECT_EQ(second.raw_response, "[1, 1, 1, 1, 1, 1]");
  ResponseCache reopened(dir.path());
  EXPECT_EQ(reopened.lookup(k)->raw_response, "[1, 1, 1, 1, 1, 1]");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(Cache, RejectsTamperedEntry) {
  testkit::TempDir dir;
  const CacheKey k{"m-0301", 0.0, "p", 0};
  {
    ResponseCache cache(dir.path());
    cache.insert(k, "x", ParseStatus::MalformedVector);
  }
  const auto path = dir / (k.hash() + ".json");
  auto j = nlohmann::json::parse(read_file(path));
  j["prompt"] = "other";
  write_file_atomic(path, j.dump());
  ResponseCache cache(dir.path());
  EXPECT_THROW(cache.lookup(k), Error);
}

TEST(Extractor, SecondCallHitsCache) {
  std::atomic<int> calls{0};
  FunctionProvider p([&](const ChatRequest&) {
    ++calls;
    return std::string("[7, 8, 6, 5, 4, 8]");
  });
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor ex(p, cache, audit, opts());
  const auto a = ex.extract("r1", "A dog runs.", "A cat sleeps.");
  EXPECT_EQ(a.vector, (GptFeatureVector{{7, 8, 6, 5, 4, 8}}));
  EXPECT_EQ(a.provider_calls, 1u);
  const auto b = ex.extract("r1", "A dog runs.", "A cat sleeps.");
  EXPECT_EQ(b.vector, a.vector);
  EXPECT_EQ(b.provider_calls, 0u);
  EXPECT_EQ(b.cache_hits, 1u);
  EXPECT_EQ(calls.load(), 1);
  EXPECT_EQ(audit.count(audit_event::kCacheHit, "r1"), 1u);
}

TEST(Extractor, ImputesMidpointAfterRetries) {
  std::atomic<int> calls{0};
  FunctionProvider p([&](const ChatRequest&) {
    ++calls;
    return std::string("I cannot answer that.");
  });
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor ex(p, cache, audit, opts(FailurePolicy::Impute));
  const auto r = ex.extract("r9", "a", "b");
  EXPECT_TRUE(r.imputed);
  EXPECT_EQ(r.vector, (GptFeatureVector{{5, 5, 5, 5, 5, 5}}));
  EXPECT_EQ(calls.load(), 4);
  EXPECT_EQ(audit.count(audit_event::kParseFailure, "r9"), 4u);
  EXPECT_EQ(audit.count(audit_event::kImputed, "r9"), 1u);
}

TEST(Extractor, FailPolicyRaises) {
  FunctionProvider p([](const ChatRequest&) { return std::string("[12, 3, 4, 5, 6, 7]"); });
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor ex(p, cache, audit, opts());
  try {
    ex.extract("r3", "a", "b");
    FAIL();
  } catch (const ExtractionFailed& e) {
    EXPECT_EQ(e.record(), "r3");
    EXPECT_NE(e.last_error().find("component 1"), std::string::npos);
  }
}

TEST(Extractor, RecoversOnRetryAndRecordsAttempt) {
  FunctionProvider p([](const ChatRequest& r) {
    return r.attempt < 2 ? std::string("no list") : std::string("Answer: [1, 2, 3, 4, 5, 6]");
  });
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor ex(p, cache, audit, opts());
  const auto r = ex.extract("r", "a", "b");
  EXPECT_EQ(r.vector, (GptFeatureVector{{1, 2, 3, 4, 5, 6}}));
  EXPECT_EQ(r.provider_calls, 3u);
  EXPECT_FALSE(r.imputed);
}

TEST(Extractor, ProviderErrorsPropagate) {
  FunctionProvider p([](const ChatRequest&) -> std::string { throw ProviderUnreachable("down"); });
  ResponseCache cache;
  AuditLog audit;
  GptFeatureExtractor ex(p, cache, audit, opts(FailurePolicy::Impute));
  EXPECT_THROW(ex.extract("r", "a", "b"), ProviderUnreachable);
}

TEST(Extractor, OnDiskReplayNeedsNoProvider) {
  testkit::TempDir dir;
  std::vector<GptExtraction> first;
  std::vector<CaptionPair> pairs;
  for (int i = 0; i < 30; ++i) pairs.push_back({"r" + std::to_string(i), "cap " + std::to_string(i), "other"});
  {
    StubProvider p(4, StubProvider::Mode::Adversarial);
    ResponseCache cache(dir.path());
    AuditLog audit;
    GptFeatureExtractor ex(p, cache, audit, opts(FailurePolicy::Impute));
    first = ex.extract_all(pairs, 4);
  }
  FunctionProvider offline([](const ChatRequest&) -> std::string { throw ProviderUnreachable("offline"); });
  ResponseCache cache(dir.path());
  AuditLog audit;
  GptFeatureExtractor ex(offline, cache, audit, opts(FailurePolicy::Impute));
  const auto again = ex.extract_all(pairs, 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(again[i].vector, first[i].vector);
    EXPECT_EQ(again[i].imputed, first[i].imputed);
    EXPECT_EQ(again[i].provider_calls, 0u);
  }
  EXPECT_EQ(audit.count(audit_event::kProviderCall), 0u);
}
