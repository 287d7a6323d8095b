// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "oocd/classifier/feature_row.hpp"
#include "oocd/random.hpp"

namespace oocd::testkit {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("oocd-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// httplib server on an ephemeral localhost port, served from a background thread.
class LocalServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  int port() const { return port_; }
  std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  int port_ = 0;
  std::thread thread_;
};

inline FeatureRow make_row(std::string id, std::array<double, kFeatureCount> f, Label l) {
  FeatureRow r;
  r.record_id = std::move(id);
  r.features = f;
  r.label = l;
  return r;
}

/// One feature carries the signal, the other seven are zero.
inline std::vector<FeatureRow> one_dim_rows(const std::vector<double>& xs, const std::vector<int>& ys) {
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::array<double, kFeatureCount> f{};
    f[0] = xs[i];
    rows.push_back(make_row("r" + std::to_string(i), f, ys[i] > 0 ? Label::OOC : Label::NOOC));
  }
  return rows;
}

/// Random feature rows: small integer grid (forces ties) or continuous values.
inline std::vector<FeatureRow> random_rows(Rng& rng, std::size_t n, bool integer_grid) {
  std::vector<FeatureRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kFeatureCount> f{};
    for (auto& v : f) {
      v = integer_grid ? static_cast<double>(uniform_index(rng, 4)) : std::round(uniform_unit(rng) * 1000.0) / 100.0;
    }
    rows.push_back(make_row("r" + std::to_string(i), f, uniform_index(rng, 2) ? Label::OOC : Label::NOOC));
  }
  return rows;
}

}  // namespace oocd::testkit
