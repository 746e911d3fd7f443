#include "ligas/types.hpp"

namespace ligas {

std::string_view to_string(Label label) { return label == Label::LA ? "LA" : "LUA"; }

std::string_view to_string(Category category) {
  switch (category) {
    case Category::CIA: return "CIA";
    case Category::RAA: return "RAA";
    case Category::SVA: return "SVA";
    case Category::SVO: return "SVO";
    case Category::WHE: return "WHE";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "LA" || text == "1") return Label::LA;
  if (text == "LUA" || text == "0") return Label::LUA;
  return std::nullopt;
}

std::optional<Category> parse_category(std::string_view text) {
  for (Category c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

}  // namespace ligas
