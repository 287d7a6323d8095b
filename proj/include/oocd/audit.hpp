// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "oocd/error.hpp"

namespace oocd {

/// Line-delimited structured event log: provider calls, cache hits,
/// imputations, clamps, gate shortcuts and the resolved run config.
/// Every event carries "event" and, where one applies, "record".
/// Thread-safe; events are kept in memory and optionally appended to a file.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& sink) { open(sink); }

  void open(const std::filesystem::path& sink) {
    std::lock_guard lock(mu_);
    out_.open(sink, std::ios::app);
    if (!out_) throw Error("cannot open audit log " + sink.string());
  }

  void emit(std::string_view event, std::string_view record, nlohmann::json fields = nlohmann::json::object()) {
    fields["event"] = event;
    if (!record.empty()) fields["record"] = record;
    std::lock_guard lock(mu_);
    fields["seq"] = events_.size();
    if (out_.is_open()) {
      out_ << fields.dump() << '\n';
      out_.flush();
    }
    events_.push_back(std::move(fields));
  }

  std::vector<nlohmann::json> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  std::size_t count(std::string_view event, std::string_view record = {}) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : events_) {
      if (e.value("event", "") != event) continue;
      if (!record.empty() && e.value("record", "") != record) continue;
      ++n;
    }
    return n;
  }

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> events_;
  std::ofstream out_;
};

namespace audit_event {
inline constexpr std::string_view kConfig = "config";
inline constexpr std::string_view kProviderCall = "provider_call";
inline constexpr std::string_view kCacheHit = "cache_hit";
inline constexpr std::string_view kParseFailure = "parse_failure";
inline constexpr std::string_view kImputed = "imputed";
inline constexpr std::string_view kClamp = "clamp";
inline constexpr std::string_view kGate = "gate";
inline constexpr std::string_view kSimilarity = "similarity";
}  // namespace audit_event

}  // namespace oocd
