#include "sslstm/labels.hpp"

#include <algorithm>
#include <cctype>

namespace sslstm {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::happy: return "happy";
    case Label::sad: return "sad";
    case Label::angry: return "angry";
    case Label::others: return "others";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Label l : kAllLabels) {
    if (lower == to_string(l)) return l;
  }
  return std::nullopt;
}

}  // namespace sslstm
