#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace sslstm {

/// Emotion classes in model output order. Ties anywhere in the library
/// resolve toward the lower index.
enum class Label : int { happy = 0, sad = 1, angry = 2, others = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<Label, kNumClasses> kAllLabels = {
    Label::happy, Label::sad, Label::angry, Label::others};
/// Classes averaged by the macro-F1.
inline constexpr std::array<Label, 3> kEmotionLabels = {
    Label::happy, Label::sad, Label::angry};

constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }
constexpr Label label_at(std::size_t i) { return static_cast<Label>(i); }

std::string_view to_string(Label l);
/// Case-insensitive parse of the canonical spelling.
std::optional<Label> parse_label(std::string_view s);

}  // namespace sslstm
