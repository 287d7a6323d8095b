// Copyright (C) 2026 The oocd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The six-question caption-relation prompt and the parser for its answer.

#include <array>
#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "oocd/error.hpp"
#include "oocd/util.hpp"

namespace oocd {

/// Provider-rated caption relation, each component an integer in [0,9]:
/// out-of-context degree, subject-matter difference, broader-context
/// difference, incoherence, missing information, semantic difference.
struct GptFeatureVector {
  std::array<int, 6> c{};

  friend bool operator==(const GptFeatureVector&, const GptFeatureVector&) = default;

  static constexpr int kMin = 0;
  static constexpr int kMax = 9;
  /// Midpoint vector used by the "impute" failure policy.
  static constexpr GptFeatureVector midpoint() { return {{5, 5, 5, 5, 5, 5}}; }
};

namespace prompt_text {

inline constexpr std::string_view kPreamble =
    "Given two sentences, I am going to ask you six questions. You should provide a final "
    "answer in a python list of length 6 where each component is a rate value (integer "
    "ranging from 0 to 9).";

inline constexpr std::array<std::string_view, 6> kQuestions = {
    "The first question: Determine whether these two sentences are out of context. Rate your "
    "judgment by an integer number ranging from 0 to 9, where 9 refers to being completely out "
    "of context, and 0 refers to being completely in context.",
    "The second question: Determine whether the subject matters of these two sentences are the "
    "same. Rate your judgment by an integer number ranging from 0 to 9, where 9 indicates that "
    "the subject matters are completely different, and 0 indicates that the subject matters are "
    "completely the same",
    "The third question: Determine whether the broader context of these two sentences refer to "
    "are the same. Rate your judgment by an integer number ranging from 0 to 9, where 9 "
    "indicates that the broader context is completely different, and 0 indicates that the "
    "broader context is completely the same",
    "The fourth question: Determine whether these two sentences cohere together. Please rate "
    "your judgment by an integer number ranging from 0 to 9, where 9 indicates that the two "
    "sentences are not coherent at all, and 0 indicates that the two sentences are highly "
    "coherent",
    "The fifth question: Determine whether any information is missing that could help to "
    "explain the relationship between the two sentences. Please rate your judgment by an "
    "integer number ranging from 0 to 9, where 9 indicates that important information is "
    "missing, and 0 indicates that there is no information missing.",
    "The sixth question: Determine the semantic similarity between the two sentences. Semantic "
    "similarity should be rated by an integer number ranges from 0 to 9, where 0 refers to "
    "semantically identical, and 9 refers to completely semantic different.",
};

inline constexpr std::string_view kPairOpen = "The two sentences are [";
inline constexpr std::string_view kPairSeparator = ", ";
inline constexpr std::string_view kClosing =
    "]. You should output the python list only without explanations.";

}  // namespace prompt_text

/// Removes C0 control characters (except newline) and DEL.
inline std::string strip_control_chars(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if ((u < 0x20 && ch != '\n') || u == 0x7F) continue;
    out.push_back(ch);
  }
  return out;
}

/// Renders the prompt for one caption pair. Lines are joined with '\n' and
/// there is no trailing newline. Captions are inserted without quoting.
inline std::string render_prompt(std::string_view caption1, std::string_view caption2) {
  if (trim(caption1).empty() || trim(caption2).empty()) throw EmptyCaption();
  std::string out(prompt_text::kPreamble);
  for (auto q : prompt_text::kQuestions) {
    out += '\n';
    out += q;
  }
  out += '\n';
  out += prompt_text::kPairOpen;
  out += strip_control_chars(caption1);
  out += prompt_text::kPairSeparator;
  out += strip_control_chars(caption2);
  out += prompt_text::kClosing;
  return out;
}

/// "[a, b, c, d, e, f]"
inline std::string format_feature_vector(const GptFeatureVector& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.c.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(v.c[i]);
  }
  out += ']';
  return out;
}

namespace detail {

struct BracketList {
  std::array<long long, 6> values{};
  bool overflow_at[6] = {};
  std::size_t end = 0;  // one past the closing bracket
};

inline bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// Tries to read "[int, int, int, int, int, int]" starting at text[pos] == '['.
inline std::optional<BracketList> read_six_int_list(std::string_view text, std::size_t pos) {
  BracketList out;
  std::size_t i = pos + 1;
  auto skip_blank = [&] {
    while (i < text.size() && is_blank(text[i])) ++i;
  };
  for (std::size_t n = 0; n < 6; ++n) {
    skip_blank();
    const std::size_t num_start = i;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
    const std::size_t digits_start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == digits_start) return std::nullopt;
    const char* first = text.data() + num_start + (text[num_start] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, text.data() + i, out.values[n]);
    if (ec == std::errc::result_out_of_range) {
      out.overflow_at[n] = true;
    } else if (ec != std::errc() || ptr != text.data() + i) {
      return std::nullopt;
    }
    skip_blank();
    if (i >= text.size()) return std::nullopt;
    const char expected = n == 5 ? ']' : ',';
    if (text[i] != expected) return std::nullopt;
    ++i;
  }
  out.end = i;
  return out;
}

inline GptFeatureVector validate_components(const BracketList& list) {
  GptFeatureVector v;
  for (std::size_t n = 0; n < 6; ++n) {
    if (list.overflow_at[n] || list.values[n] < GptFeatureVector::kMin ||
        list.values[n] > GptFeatureVector::kMax) {
      throw OutOfRange(n + 1);
    }
    v.c[n] = static_cast<int>(list.values[n]);
  }
  return v;
}

}  // namespace detail

/// Strict pass: the whole trimmed response is the list. Lenient pass: the
/// first bracketed run of exactly six comma-separated integers anywhere.
inline GptFeatureVector parse_feature_vector(std::string_view raw) {
  const auto body = trim(raw);
  if (!body.empty() && body.front() == '[') {
    if (auto list = detail::read_six_int_list(body, 0); list && list->end == body.size()) {
      return detail::validate_components(*list);
    }
  }
  for (std::size_t pos = raw.find('['); pos != std::string_view::npos; pos = raw.find('[', pos + 1)) {
    if (auto list = detail::read_six_int_list(raw, pos)) return detail::validate_components(*list);
  }
  throw MalformedVector();
}

}  // namespace oocd
