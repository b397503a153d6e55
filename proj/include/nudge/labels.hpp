#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace nudge {

/// Three-class sentiment label. The integer values are the one-hot/class index.
enum class SentimentLabel : int {
  positive = 0,
  negative = 1,
  neutral = 2,
};

inline constexpr std::size_t kNumClasses = 3;

inline constexpr std::array<SentimentLabel, kNumClasses> kAllLabels = {
    SentimentLabel::positive, SentimentLabel::negative, SentimentLabel::neutral};

constexpr std::size_t index_of(SentimentLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

/// Throws InvalidArgument when index >= kNumClasses.
SentimentLabel label_from_index(std::size_t index);

/// Canonical uppercase name: POSITIVE, NEGATIVE, NEUTRAL.
std::string_view to_string(SentimentLabel label) noexcept;

/// Case-insensitive, surrounding whitespace ignored. Throws InvalidArgument.
SentimentLabel parse_label(std::string_view text);

}  // namespace nudge
