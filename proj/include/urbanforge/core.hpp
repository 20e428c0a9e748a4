#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace urbanforge {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec3f = Vec3T<float>;
using Tri = Eigen::Vector3i;

using Ring = std::vector<Vec2>;

/// Axis-aligned rectangle in local meters.
struct Rect {
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  Vec2 size() const { return max - min; }
  Vec2 center() const { return 0.5 * (min + max); }
  bool contains(const Vec2& p, double eps = 1e-9) const {
    return p.x() >= min.x() - eps && p.y() >= min.y() - eps && p.x() <= max.x() + eps &&
           p.y() <= max.y() + eps;
  }
};

struct Box3 {
  Vec3 min{0.0, 0.0, 0.0};
  Vec3 max{0.0, 0.0, 0.0};

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
};

enum class AssetCategory : std::uint8_t {
  Buildings = 0,
  RoadsPaths = 1,
  ForestVegetation = 2,
  Water = 3,
  Ground = 4,
};

inline constexpr std::uint8_t kBackgroundSemantic = 255;
inline constexpr AssetCategory kAllCategories[] = {
    AssetCategory::Buildings, AssetCategory::RoadsPaths, AssetCategory::ForestVegetation,
    AssetCategory::Water, AssetCategory::Ground};

inline const char* category_name(AssetCategory c) {
  switch (c) {
    case AssetCategory::Buildings: return "Buildings";
    case AssetCategory::RoadsPaths: return "RoadsPaths";
    case AssetCategory::ForestVegetation: return "ForestVegetation";
    case AssetCategory::Water: return "Water";
    case AssetCategory::Ground: return "Ground";
  }
  return "Unknown";
}

inline std::optional<AssetCategory> category_from_name(std::string_view name) {
  for (AssetCategory c : kAllCategories) {
    if (name == category_name(c)) return c;
  }
  return std::nullopt;
}

}  // namespace urbanforge
