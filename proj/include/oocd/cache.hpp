// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Content-addressed, append-only store of raw provider responses.
//
// One JSON file per entry, named "<key>.json" where key is the SHA-256 of the
// canonical encoding of (model_id, temperature, prompt[, attempt]). Retries
// after a malformed answer get their own key (attempt >= 1), so a cache
// directory replays an entire extraction, retries included, with no network.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <system_error>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "oocd/error.hpp"
#include "oocd/util.hpp"

namespace oocd {

enum class ParseStatus { Ok, MalformedVector, OutOfRange };

inline const char* parse_status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::MalformedVector: return "malformed_vector";
    case ParseStatus::OutOfRange: return "out_of_range";
  }
  return "ok";
}

inline ParseStatus parse_status_from(std::string_view s) {
  if (s == "ok") return ParseStatus::Ok;
  if (s == "malformed_vector") return ParseStatus::MalformedVector;
  if (s == "out_of_range") return ParseStatus::OutOfRange;
  throw Error("unknown parse status '" + std::string(s) + "'");
}

struct CacheKey {
  std::string model_id;
  double temperature = 0.0;
  std::string prompt;
  unsigned attempt = 0;

  std::string hash() const {
    auto canon = nlohmann::json::array({model_id, temperature, prompt});
    if (attempt > 0) canon.push_back(attempt);
    return sha256_hex(canon.dump());
  }
};

struct CacheEntry {
  std::string key;
  CacheKey fields;
  std::string raw_response;
  ParseStatus status = ParseStatus::Ok;
  std::int64_t timestamp = 0;  // unix seconds at insertion
};

class ResponseCache {
 public:
  /// In-memory cache (tests, throwaway runs).
  ResponseCache() = default;

  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(*dir_);
  }

  std::optional<CacheEntry> lookup(const CacheKey& k) const {
    const auto key = k.hash();
    {
      std::lock_guard lock(mu_);
      if (auto it = mem_.find(key); it != mem_.end()) return it->second;
    }
    if (!dir_) return std::nullopt;
    const auto path = *dir_ / (key + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    auto entry = decode(read_file(path), path);
    std::lock_guard lock(mu_);
    mem_.emplace(key, entry);
    return entry;
  }

  /// Inserts an entry unless one already exists under the same key; returns
  /// the entry that is stored afterwards (existing entries always win).
  CacheEntry insert(const CacheKey& k, std::string raw_response, ParseStatus status) {
    CacheEntry e;
    e.key = k.hash();
    e.fields = k;
    e.raw_response = std::move(raw_response);
    e.status = status;
    e.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
    if (dir_) {
      const auto target = *dir_ / (e.key + ".json");
      auto tmp = target;
      tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write cache entry " + tmp.string());
        out << encode(e).dump(2) << '\n';
      }
      // A hard link fails if the target exists, which makes the insert
      // atomic and never overwrites.
      std::error_code ec;
      std::filesystem::create_hard_link(tmp, target, ec);
      std::filesystem::remove(tmp);
      if (ec && ec != std::errc::file_exists) {
        throw Error("cannot publish cache entry " + target.string() + ": " + ec.message());
      }
      if (ec) {
        auto existing = decode(read_file(target), target);
        std::lock_guard lock(mu_);
        return mem_.emplace(existing.key, existing).first->second;
      }
    }
    std::lock_guard lock(mu_);
    return mem_.emplace(e.key, e).first->second;
  }

  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

  static nlohmann::json encode(const CacheEntry& e) {
    return {{"key", e.key},
            {"model_id", e.fields.model_id},
            {"temperature", e.fields.temperature},
            {"prompt", e.fields.prompt},
            {"attempt", e.fields.attempt},
            {"raw_response", e.raw_response},
            {"parse_status", parse_status_name(e.status)},
            {"timestamp", e.timestamp}};
  }

  static CacheEntry decode(const std::string& text, const std::filesystem::path& origin) {
    try {
      const auto j = nlohmann::json::parse(text);
      CacheEntry e;
      e.key = j.at("key").get<std::string>();
      e.fields.model_id = j.at("model_id").get<std::string>();
      e.fields.temperature = j.at("temperature").get<double>();
      e.fields.prompt = j.at("prompt").get<std::string>();
      e.fields.attempt = j.value("attempt", 0u);
      e.raw_response = j.at("raw_response").get<std::string>();
      e.status = parse_status_from(j.at("parse_status").get<std::string>());
      e.timestamp = j.value("timestamp", std::int64_t{0});
      if (e.fields.hash() != e.key) throw Error("key does not match contents");
      return e;
    } catch (const std::exception& ex) {
      throw Error("corrupt cache entry " + origin.string() + ": " + ex.what());
    }
  }

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, CacheEntry> mem_;
};

}  // namespace oocd
