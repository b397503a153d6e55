#include "nudge/labels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "nudge/errors.hpp"

namespace nudge {

SentimentLabel label_from_index(std::size_t index) {
  if (index >= kNumClasses) {
    throw InvalidArgument("label index out of range: " + std::to_string(index));
  }
  return kAllLabels[index];
}

std::string_view to_string(SentimentLabel label) noexcept {
  switch (label) {
    case SentimentLabel::positive:
      return "POSITIVE";
    case SentimentLabel::negative:
      return "NEGATIVE";
    case SentimentLabel::neutral:
      return "NEUTRAL";
  }
  return "UNKNOWN";
}

SentimentLabel parse_label(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (const auto label : kAllLabels) {
    if (upper == to_string(label)) {
      return label;
    }
  }
  throw InvalidArgument("unknown sentiment label '" + std::string(text) + "'");
}

}  // namespace nudge
