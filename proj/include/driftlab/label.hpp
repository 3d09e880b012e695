#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace driftlab {

// Stance classes in their fixed order. The underlying value doubles as the
// row/column index in matrices and probability vectors.
enum class Label : std::uint8_t { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<Label, kNumClasses> kAllLabels{Label::negative, Label::neutral,
                                                           Label::positive};

constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }

constexpr Label label_at(std::size_t i) { return static_cast<Label>(i); }

// -1 / 0 / +1, the mapping used by the sentiment index.
constexpr int numeric_value(Label l) { return static_cast<int>(l) - 1; }

constexpr std::string_view to_string(Label l) {
  switch (l) {
    case Label::negative: return "negative";
    case Label::neutral: return "neutral";
    case Label::positive: return "positive";
  }
  return "?";
}

constexpr std::optional<Label> parse_label(std::string_view s) {
  if (s == "negative") return Label::negative;
  if (s == "neutral") return Label::neutral;
  if (s == "positive") return Label::positive;
  return std::nullopt;
}

}  // namespace driftlab
