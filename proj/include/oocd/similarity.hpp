// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Caption-pair semantic similarity (s_base, s_large) from one of three
// sources: the embedding sidecar over HTTP, a precomputed per-record file,
// or a lexical fallback that needs no model.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "oocd/audit.hpp"
#include "oocd/dataset.hpp"
#include "oocd/error.hpp"
#include "oocd/provider.hpp"
#include "oocd/util.hpp"

namespace oocd {

enum class SimilaritySourceKind { Sidecar, Precomputed, LexicalFallback };

inline const char* similarity_source_name(SimilaritySourceKind k) {
  switch (k) {
    case SimilaritySourceKind::Sidecar: return "sidecar";
    case SimilaritySourceKind::Precomputed: return "precomputed";
    case SimilaritySourceKind::LexicalFallback: return "lexical";
  }
  return "lexical";
}

inline SimilaritySourceKind similarity_source_from(std::string_view s) {
  if (s == "sidecar") return SimilaritySourceKind::Sidecar;
  if (s == "precomputed") return SimilaritySourceKind::Precomputed;
  if (s == "lexical") return SimilaritySourceKind::LexicalFallback;
  throw ConfigError("unknown similarity source '" + std::string(s) + "' (expected sidecar|precomputed|lexical)");
}

struct SimilarityVector {
  double s_base = 0.0;
  double s_large = 0.0;
  SimilaritySourceKind source = SimilaritySourceKind::LexicalFallback;

  friend bool operator==(const SimilarityVector&, const SimilarityVector&) = default;
};

namespace detail {

/// Decodes one UTF-8 code point at s[i], advancing i. Invalid bytes decode as
/// themselves (one byte).
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1) >= 0) {
    const char32_t cp = ((b0 & 0x1F) << 6) | cont(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) >= 0 && cont(2) >= 0) {
    const char32_t cp = ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) >= 0 && cont(2) >= 0 && cont(3) >= 0) {
    const char32_t cp = ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

inline bool is_unicode_space(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

inline bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

}  // namespace detail

/// Whitespace split (Unicode), ASCII lowercase, leading/trailing ASCII
/// punctuation stripped; tokens that strip to nothing are dropped.
inline std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    std::string_view t = current;
    while (!t.empty() && detail::is_ascii_punct(t.front())) t.remove_prefix(1);
    while (!t.empty() && detail::is_ascii_punct(t.back())) t.remove_suffix(1);
    if (!t.empty()) tokens.emplace_back(t);
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_unicode_space(cp)) {
      flush();
      continue;
    }
    for (std::size_t k = start; k < i; ++k) {
      const char c = text[k];
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return tokens;
}

/// s_base: Jaccard similarity of the token sets. s_large: cosine similarity
/// of the term-frequency vectors. Two captions with no tokens at all score 1.
inline SimilarityVector lexical_similarity_fallback(std::string_view caption1, std::string_view caption2) {
  if (trim(caption1).empty() || trim(caption2).empty()) throw EmptyCaption();
  std::map<std::string, std::int64_t> tf1, tf2;
  for (auto& t : lexical_tokens(caption1)) ++tf1[t];
  for (auto& t : lexical_tokens(caption2)) ++tf2[t];

  SimilarityVector out;
  out.source = SimilaritySourceKind::LexicalFallback;
  if (tf1.empty() || tf2.empty()) {
    const double v = tf1.empty() && tf2.empty() ? 1.0 : 0.0;
    out.s_base = out.s_large = v;
    return out;
  }
  std::int64_t inter = 0, dot = 0, n1 = 0, n2 = 0;
  for (const auto& [tok, c] : tf1) {
    n1 += c * c;
    if (auto it = tf2.find(tok); it != tf2.end()) {
      ++inter;
      dot += c * it->second;
    }
  }
  for (const auto& [tok, c] : tf2) n2 += c * c;
  const auto uni = static_cast<std::int64_t>(tf1.size() + tf2.size()) - inter;
  out.s_base = static_cast<double>(inter) / static_cast<double>(uni);
  out.s_large = std::min(1.0, static_cast<double>(dot) / std::sqrt(static_cast<double>(n1) * static_cast<double>(n2)));
  return out;
}

/// Clamps both components into [0,1]; emits a "clamp" audit event when a value moved.
inline SimilarityVector clamp_similarity(SimilarityVector v, AuditLog* audit, std::string_view record_id) {
  auto clamp01 = [&](double& x, const char* field) {
    if (!std::isfinite(x)) throw SidecarProtocolError(std::string(field) + " is not a finite number");
    const double c = std::clamp(x, 0.0, 1.0);
    if (c != x) {
      if (audit) audit->emit(audit_event::kClamp, record_id, {{"field", field}, {"original", x}, {"clamped", c}});
      x = c;
    }
  };
  clamp01(v.s_base, "s_base");
  clamp01(v.s_large, "s_large");
  return v;
}

/// Client for the embedding sidecar:
///   POST /similarity {"caption1","caption2"} -> {"s_base","s_large",...}
///   GET  /health -> {"ready": bool, "model_ids": [...], ...}
class SidecarClient {
 public:
  explicit SidecarClient(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::milliseconds(30'000))
      : url_(split_url(endpoint)), timeout_(timeout) {}

  SimilarityVector fetch(std::string_view caption1, std::string_view caption2, AuditLog* audit = nullptr,
                         std::string_view record_id = {}) const {
    auto cli = client();
    const nlohmann::json body = {{"caption1", caption1}, {"caption2", caption2}};
    auto res = cli.Post(join_path("/similarity"), body.dump(), "application/json");
    if (!res) throw SidecarUnreachable("similarity sidecar at " + url_.base + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw SidecarProtocolError("sidecar /similarity returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    SimilarityVector v;
    try {
      const auto j = nlohmann::json::parse(res->body);
      v.s_base = j.at("s_base").get<double>();
      v.s_large = j.at("s_large").get<double>();
    } catch (const std::exception& e) {
      throw SidecarProtocolError(std::string("sidecar /similarity response: ") + e.what());
    }
    v.source = SimilaritySourceKind::Sidecar;
    return clamp_similarity(v, audit, record_id);
  }

  nlohmann::json health() const {
    auto cli = client();
    auto res = cli.Get(join_path("/health"));
    if (!res) throw SidecarUnreachable("similarity sidecar at " + url_.base + ": " + httplib::to_string(res.error()));
    try {
      auto j = nlohmann::json::parse(res->body);
      j["http_status"] = res->status;
      return j;
    } catch (const std::exception& e) {
      throw SidecarProtocolError(std::string("sidecar /health response: ") + e.what());
    }
  }

 private:
  httplib::Client client() const {
    httplib::Client cli(url_.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count();
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    return cli;
  }

  std::string join_path(std::string_view route) const {
    std::string p = url_.path;
    while (!p.empty() && p.back() == '/') p.pop_back();
    return p + std::string(route);
  }

  ParsedUrl url_;
  std::chrono::milliseconds timeout_;
};

/// fetch_similarity(caption1, caption2, endpoint) as a free function.
inline SimilarityVector fetch_similarity(std::string_view caption1, std::string_view caption2, const std::string& endpoint,
                                         AuditLog* audit = nullptr, std::string_view record_id = {}) {
  return SidecarClient(endpoint).fetch(caption1, caption2, audit, record_id);
}

/// Source of (s_base, s_large) for a dataset record. Implementations are
/// thread-safe for concurrent get() calls.
class SimilaritySource {
 public:
  virtual ~SimilaritySource() = default;
  virtual SimilarityVector get(const TripletRecord& record) = 0;
  virtual SimilaritySourceKind kind() const = 0;
};

class LexicalSimilaritySource final : public SimilaritySource {
 public:
  SimilarityVector get(const TripletRecord& r) override { return lexical_similarity_fallback(r.caption1, r.caption2); }
  SimilaritySourceKind kind() const override { return SimilaritySourceKind::LexicalFallback; }
};

class SidecarSimilaritySource final : public SimilaritySource {
 public:
  SidecarSimilaritySource(std::string endpoint, AuditLog* audit) : client_(std::move(endpoint)), audit_(audit) {}
  SimilarityVector get(const TripletRecord& r) override { return client_.fetch(r.caption1, r.caption2, audit_, r.id); }
  SimilaritySourceKind kind() const override { return SimilaritySourceKind::Sidecar; }

 private:
  SidecarClient client_;
  AuditLog* audit_;
};

/// Per-record scores replayed from a file of lines {"id", "s_base", "s_large"}.
/// Records missing from the file go to `fallback` when one is set.
class PrecomputedSimilaritySource final : public SimilaritySource {
 public:
  PrecomputedSimilaritySource(std::string_view jsonl, AuditLog* audit,
                              std::unique_ptr<SimilaritySource> fallback = nullptr)
      : audit_(audit), fallback_(std::move(fallback)) {
    std::size_t pos = 0, line = 0;
    while (pos < jsonl.size()) {
      auto nl = jsonl.find('\n', pos);
      if (nl == std::string_view::npos) nl = jsonl.size();
      ++line;
      const auto text = trim(jsonl.substr(pos, nl - pos));
      pos = nl + 1;
      if (text.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(text);
        const auto& idv = j.at("id");
        const auto id = idv.is_string() ? idv.get<std::string>() : std::to_string(idv.get<long long>());
        scores_[id] = {j.at("s_base").get<double>(), j.at("s_large").get<double>()};
      } catch (const std::exception& e) {
        throw MalformedRecord(line, std::string("similarity file: ") + e.what());
      }
    }
  }

  static std::unique_ptr<PrecomputedSimilaritySource> from_file(const std::filesystem::path& path, AuditLog* audit,
                                                                std::unique_ptr<SimilaritySource> fallback = nullptr) {
    return std::make_unique<PrecomputedSimilaritySource>(read_file(path), audit, std::move(fallback));
  }

  SimilarityVector get(const TripletRecord& r) override {
    const auto it = scores_.find(r.id);
    if (it == scores_.end()) {
      if (fallback_) return fallback_->get(r);
      throw Error("no precomputed similarity for record '" + r.id + "'");
    }
    SimilarityVector v{it->second.first, it->second.second, SimilaritySourceKind::Precomputed};
    return clamp_similarity(v, audit_, r.id);
  }
  SimilaritySourceKind kind() const override { return SimilaritySourceKind::Precomputed; }

 private:
  AuditLog* audit_;
  std::unique_ptr<SimilaritySource> fallback_;
  std::unordered_map<std::string, std::pair<double, double>> scores_;
};

/// Rejects a batch whose vectors come from more than one source unless mixing
/// is explicitly allowed.
inline void validate_similarity_sources(const std::vector<SimilarityVector>& vectors, bool allow_mixed) {
  if (allow_mixed || vectors.empty()) return;
  std::set<SimilaritySourceKind> kinds;
  for (const auto& v : vectors) kinds.insert(v.source);
  if (kinds.size() > 1) {
    std::string names;
    for (auto k : kinds) names += std::string(names.empty() ? "" : ", ") + similarity_source_name(k);
    throw MixedSimilaritySources("similarity sources mixed in one run (" + names +
                                 "); pass --allow-mixed-sources to accept");
  }
}

}  // namespace oocd
