#include "wids/common.hpp"

#include <charconv>

namespace wids {

ClassLabel label_from_index(std::size_t i) {
  if (i >= kNumClasses) throw Error("class index out of range: " + std::to_string(i));
  return static_cast<ClassLabel>(i);
}

std::string_view label_name(ClassLabel c) noexcept {
  switch (c) {
    case ClassLabel::normal: return "Normal";
    case ClassLabel::kr00k: return "Kr00k";
    case ClassLabel::krack: return "Krack";
  }
  return "?";
}

std::optional<ClassLabel> parse_label(std::string_view text) noexcept {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text == "Normal" || text == "normal" || text == "0") return ClassLabel::normal;
  if (text == "Kr00k" || text == "kr00k" || text == "Krook" || text == "krook" || text == "1") {
    return ClassLabel::kr00k;
  }
  if (text == "Krack" || text == "krack" || text == "KRACK" || text == "2") return ClassLabel::krack;
  return std::nullopt;
}

std::array<std::size_t, kNumClasses> class_counts(std::span<const ClassLabel> labels) noexcept {
  std::array<std::size_t, kNumClasses> counts{};
  for (auto l : labels) ++counts[index_of(l)];
  return counts;
}

}  // namespace wids
