// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "oocd/error.hpp"

namespace oocd {

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ascii_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ascii_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes a group of files so that either all of them appear or none do.
/// Contents are staged to temporaries next to their targets and renamed on
/// commit(); an uncommitted writer removes its temporaries on destruction.
class AtomicWriter {
 public:
  AtomicWriter() = default;
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;
  ~AtomicWriter() {
    std::error_code ec;
    for (const auto& [tmp, target] : staged_) std::filesystem::remove(tmp, ec);
  }

  void stage(const std::filesystem::path& target, std::string_view content) {
    auto tmp = target;
    tmp += ".tmp-" + std::to_string(staged_.size());
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp.string());
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      out.flush();
      if (!out) throw Error("short write to " + tmp.string());
    }
    staged_.emplace_back(std::move(tmp), target);
  }

  void commit() {
    for (const auto& [tmp, target] : staged_) std::filesystem::rename(tmp, target);
    staged_.clear();
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

inline void write_file_atomic(const std::filesystem::path& target, std::string_view content) {
  AtomicWriter w;
  w.stage(target, content);
  w.commit();
}

/// Fixed-precision decimal rendering ("%.*f"), locale independent.
inline std::string format_fixed(double value, int digits) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", digits, value);
  return buf.data();
}

}  // namespace oocd
