#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace ligas {

// Acceptability labels double as classifier class indices (CoLA convention:
// 1 = acceptable).
enum class Label : int { LUA = 0, LA = 1 };

enum class Category { CIA, RAA, SVA, SVO, WHE };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::CIA, Category::RAA, Category::SVA, Category::SVO, Category::WHE};

std::string_view to_string(Label label);
std::string_view to_string(Category category);

// Accepts "LA"/"LUA" and the numeric forms "1"/"0".
std::optional<Label> parse_label(std::string_view text);
std::optional<Category> parse_category(std::string_view text);

inline int class_index(Label label) { return static_cast<int>(label); }
inline Label label_from_class(int index) { return index == 1 ? Label::LA : Label::LUA; }

}  // namespace ligas
