// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace rvdet {

/// Registered object categories. Dense outputs carry one logit per entry.
enum class Category : std::uint8_t {
  kVehicle = 0,
  kPedestrian = 1,
  kCyclist = 2,
};

inline constexpr std::size_t kNumCategories = 3;

inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kVehicle, Category::kPedestrian, Category::kCyclist};

constexpr std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

constexpr std::string_view category_name(Category c) {
  switch (c) {
    case Category::kVehicle:
      return "VEHICLE";
    case Category::kPedestrian:
      return "PEDESTRIAN";
    case Category::kCyclist:
      return "CYCLIST";
  }
  return "UNKNOWN";
}

constexpr std::optional<Category> parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

constexpr std::optional<Category> category_from_index(std::size_t i) {
  if (i >= kNumCategories) return std::nullopt;
  return kAllCategories[i];
}

}  // namespace rvdet
