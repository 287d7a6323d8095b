// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Chat-completion providers: the live HTTP client, the offline stub, and the
// client-side token-bucket rate limiter they share.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "oocd/error.hpp"
#include "oocd/prompt.hpp"
#include "oocd/random.hpp"
#include "oocd/util.hpp"

namespace oocd {

inline constexpr std::string_view kPinnedModel = "gpt-3.5-turbo-0301";
inline constexpr std::string_view kDefaultEndpoint = "https://api.openai.com/v1/chat/completions";
inline constexpr std::string_view kApiKeyVariable = "OOCD_API_KEY";

/// True when the id names a dated snapshot ("gpt-3.5-turbo-0301",
/// "gpt-4o-2024-05-13") rather than an auto-updating alias.
inline bool is_pinned_model_id(std::string_view id) {
  const auto dash = id.find('-');
  if (dash == std::string_view::npos) return false;
  // The last run of digits after a dash must have at least 4 digits.
  const auto last = id.rfind('-');
  const auto tail = id.substr(last + 1);
  return tail.size() >= 4 && std::ranges::all_of(tail, [](char c) { return c >= '0' && c <= '9'; });
}

struct ProviderConfig {
  std::string endpoint_url{kDefaultEndpoint};
  std::string model_id{kPinnedModel};
  double temperature = 0.0;
  std::string api_key;
  /// Transport-level retries (connection errors, 5xx, 429).
  int max_retries = 3;
  int requests_per_minute = 60;
  double burst = 1.0;
  std::chrono::milliseconds timeout{30'000};
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_max{30'000};
  /// Enforces temperature 0 and a pinned snapshot.
  bool replication_mode = true;

  void validate() const {
    if (requests_per_minute <= 0) throw ConfigError("requests_per_minute must be positive");
    if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
    if (replication_mode) {
      if (temperature != 0.0) throw ConfigError("replication mode requires temperature 0");
      if (!is_pinned_model_id(model_id)) {
        throw ConfigError("replication mode requires a pinned model snapshot, got '" + model_id + "'");
      }
    }
  }
};

struct ChatRequest {
  std::string model_id;
  double temperature = 0.0;
  std::string prompt;
  /// Retry index of this request for the same prompt; never sent on the wire.
  unsigned attempt = 0;
};

/// Must be safe to call from several threads at once.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Wraps a callable; used by tests and for ad-hoc providers.
class FunctionProvider final : public ChatProvider {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionProvider(Fn fn, std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}
  std::string complete(const ChatRequest& request) override { return fn_(request); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// Token bucket with reservation semantics: reserve() always takes a token
/// and returns how long the caller must wait before using it.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double tokens_per_second, double burst)
      : rate_(tokens_per_second), burst_(std::max(1.0, burst)), tokens_(burst_) {
    if (!(rate_ > 0.0)) throw ConfigError("token bucket rate must be positive");
  }

  static std::shared_ptr<TokenBucket> per_minute(int requests_per_minute, double burst = 1.0) {
    return std::make_shared<TokenBucket>(requests_per_minute / 60.0, burst);
  }

  std::chrono::nanoseconds reserve(Clock::time_point now) {
    std::lock_guard lock(mu_);
    if (!last_) last_ = now;
    const double elapsed = std::chrono::duration<double>(now - *last_).count();
    if (elapsed > 0) {
      tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
      last_ = now;
    }
    tokens_ -= 1.0;
    if (tokens_ >= 0.0) return std::chrono::nanoseconds{0};
    return std::chrono::nanoseconds{static_cast<std::int64_t>(std::ceil(-tokens_ / rate_ * 1e9))};
  }

  void acquire() {
    const auto wait = reserve(Clock::now());
    if (wait.count() > 0) std::this_thread::sleep_for(wait);
  }

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::optional<Clock::time_point> last_;
};

/// Exponential backoff: base * 2^attempt, capped. A Retry-After hint, when
/// larger, takes precedence (still capped).
inline std::chrono::milliseconds backoff_delay(int attempt, std::chrono::milliseconds base,
                                               std::chrono::milliseconds cap,
                                               std::optional<std::chrono::milliseconds> hint = {}) {
  const double scaled = static_cast<double>(base.count()) * std::ldexp(1.0, std::min(attempt, 30));
  auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(std::min(scaled, static_cast<double>(cap.count()))));
  if (hint && *hint > delay) delay = std::min(*hint, cap);
  return delay;
}

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw ConfigError("endpoint url lacks a scheme: " + std::string(url));
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + std::string(scheme));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

/// OpenAI-compatible chat-completion client. Sends a single user message and
/// returns the first choice's message content.
class LiveProvider final : public ChatProvider {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LiveProvider(ProviderConfig config, std::shared_ptr<TokenBucket> limiter = nullptr,
               Sleeper sleeper = nullptr)
      : config_(std::move(config)),
        url_(split_url(config_.endpoint_url)),
        limiter_(limiter ? std::move(limiter)
                         : TokenBucket::per_minute(config_.requests_per_minute, config_.burst)),
        sleep_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (config_.api_key.empty()) {
      throw ConfigError("live provider needs an API key; set " + std::string(kApiKeyVariable));
    }
  }

  static nlohmann::json request_body(const ChatRequest& request) {
    return {{"model", request.model_id},
            {"temperature", request.temperature},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  }

  /// First choice text of a chat-completion response body.
  static std::string response_text(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& msg = j.at("choices").at(0).at("message").at("content");
      return msg.get<std::string>();
    } catch (const std::exception& e) {
      throw ProviderError(std::string("unexpected chat-completion response: ") + e.what());
    }
  }

  std::string complete(const ChatRequest& request) override {
    const auto body = request_body(request).dump();
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
    std::string last_error;
    bool throttled = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      limiter_->acquire();
      httplib::Client cli(url_.base);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout).count() % 1'000'000;
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      auto res = cli.Post(url_.path, headers, body, "application/json");

      std::optional<std::chrono::milliseconds> hint;
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        throttled = false;
      } else if (res->status == 200) {
        return response_text(res->body);
      } else if (res->status == 429) {
        throttled = true;
        last_error = "HTTP 429";
        if (res->has_header("Retry-After")) {
          try {
            hint = std::chrono::milliseconds(static_cast<std::int64_t>(std::stod(res->get_header_value("Retry-After")) * 1000));
          } catch (const std::exception&) {
          }
        }
      } else if (res->status >= 500) {
        throttled = false;
        last_error = "HTTP " + std::to_string(res->status);
      } else {
        throw ProviderError("provider rejected request: HTTP " + std::to_string(res->status) + " " + res->body);
      }
      if (attempt < config_.max_retries) {
        sleep_(backoff_delay(attempt, config_.backoff_base, config_.backoff_max, hint));
      }
    }
    if (throttled) throw RateLimited("provider throttling persisted after " + std::to_string(config_.max_retries) + " retries");
    throw ProviderUnreachable(config_.endpoint_url + ": " + last_error);
  }

  std::string name() const override { return "live"; }

 private:
  ProviderConfig config_;
  ParsedUrl url_;
  std::shared_ptr<TokenBucket> limiter_;
  Sleeper sleep_;
};

/// Offline provider for tests and CI. Every answer is a function of the
/// prompt, the seed and (adversarial mode only) the request's retry index.
class StubProvider final : public ChatProvider {
 public:
  enum class Mode { Seeded, Fixture, Adversarial };

  explicit StubProvider(std::uint64_t seed, Mode mode = Mode::Seeded) : seed_(seed), mode_(mode) {}

  /// Fixture entries are looked up by caption pair; unknown pairs fall back to
  /// the seeded answer.
  void add_fixture(std::string_view caption1, std::string_view caption2, const GptFeatureVector& v) {
    std::lock_guard lock(mu_);
    fixtures_[sha256_hex(render_prompt(caption1, caption2))] = v;
  }

  /// Loads fixture lines {"caption1": ..., "caption2": ..., "vector": [6 ints]}.
  void load_fixtures(std::string_view jsonl) {
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
        const auto arr = j.at("vector").get<std::vector<int>>();
        if (arr.size() != 6) throw Error("vector must have 6 components");
        GptFeatureVector v;
        for (std::size_t i = 0; i < 6; ++i) {
          if (arr[i] < 0 || arr[i] > 9) throw OutOfRange(i + 1);
          v.c[i] = arr[i];
        }
        add_fixture(j.at("caption1").get<std::string>(), j.at("caption2").get<std::string>(), v);
      } catch (const std::exception& e) {
        throw MalformedRecord(line, std::string("fixture: ") + e.what());
      }
    }
  }

  static GptFeatureVector seeded_vector(std::string_view prompt, std::uint64_t seed) {
    Rng rng(prompt_digest(prompt) ^ seed);
    GptFeatureVector v;
    for (auto& c : v.c) c = static_cast<int>(uniform_index(rng, 10));
    return v;
  }

  std::string complete(const ChatRequest& request) override {
    const auto& prompt = request.prompt;
    switch (mode_) {
      case Mode::Seeded:
        return format_feature_vector(seeded_vector(prompt, seed_));
      case Mode::Fixture: {
        std::lock_guard lock(mu_);
        if (auto it = fixtures_.find(sha256_hex(prompt)); it != fixtures_.end()) {
          return format_feature_vector(it->second);
        }
        return format_feature_vector(seeded_vector(prompt, seed_));
      }
      case Mode::Adversarial:
        return adversarial_answer(prompt, seed_, request.attempt);
    }
    return {};
  }

  /// Adversarial schedule: per (prompt, seed, attempt) pick one of
  /// clean (50%), prose-wrapped (20%), no list (20%), out-of-range (10%).
  static std::string adversarial_answer(std::string_view prompt, std::uint64_t seed, std::uint64_t attempt) {
    const auto v = format_feature_vector(seeded_vector(prompt, seed));
    Rng rng(prompt_digest(prompt) ^ (seed * 0x9E3779B97F4A7C15ULL) ^ (attempt + 1));
    const auto draw = uniform_index(rng, 10);
    if (draw < 5) return v;
    if (draw < 7) return "Sure. Based on the two sentences, my ratings are " + v + ". Let me know if you need more.";
    if (draw < 9) return "I'm sorry, but I cannot rate these sentences without more context.";
    return "[12, 3, 4, 5, 6, 7]";
  }

  std::string name() const override {
    switch (mode_) {
      case Mode::Seeded: return "stub";
      case Mode::Fixture: return "fixture";
      case Mode::Adversarial: return "adversarial";
    }
    return "stub";
  }

 private:
  static std::uint64_t prompt_digest(std::string_view prompt) {
    const auto hex = sha256_hex(prompt);
    return std::stoull(hex.substr(0, 16), nullptr, 16);
  }

  std::uint64_t seed_;
  Mode mode_;
  std::mutex mu_;
  std::unordered_map<std::string, GptFeatureVector> fixtures_;
};

}  // namespace oocd
