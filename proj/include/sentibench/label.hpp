// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "sentibench/error.hpp"

namespace sentibench {

enum class SentimentLabel : int { Negative = -1, Neutral = 0, Positive = 1 };

inline constexpr std::size_t kNumClasses = 3;

/// Labels in canonical order. Every per-class array in the library is indexed
/// this way, so "first index" and "smallest label" coincide.
inline constexpr std::array<SentimentLabel, kNumClasses> kAllLabels = {
    SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive};

constexpr std::size_t class_index(SentimentLabel label) noexcept {
  return static_cast<std::size_t>(static_cast<int>(label) + 1);
}

constexpr SentimentLabel label_from_index(std::size_t index) noexcept {
  return static_cast<SentimentLabel>(static_cast<int>(index) - 1);
}

constexpr int label_value(SentimentLabel label) noexcept {
  return static_cast<int>(label);
}

inline std::optional<SentimentLabel> label_from_int(long long value) noexcept {
  if (value < -1 || value > 1) return std::nullopt;
  return static_cast<SentimentLabel>(static_cast<int>(value));
}

/// Strict parse: accepts "-1", "0", "1" (surrounding blanks and a leading '+'
/// allowed). Anything else is rejected.
inline std::optional<SentimentLabel> parse_label(std::string_view text) noexcept {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text == "-1") return SentimentLabel::Negative;
  if (text == "0" || text == "-0" || text == "+0") return SentimentLabel::Neutral;
  if (text == "1" || text == "+1") return SentimentLabel::Positive;
  return std::nullopt;
}

inline std::string to_string(SentimentLabel label) {
  return std::to_string(label_value(label));
}

/// Argmax over per-class scores; ties resolve to the smallest label.
template <typename Scores>
SentimentLabel argmax_label(const Scores& scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return label_from_index(best);
}

}  // namespace sentibench
