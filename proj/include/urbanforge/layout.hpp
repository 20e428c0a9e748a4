#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "urbanforge/core.hpp"

namespace urbanforge {

using TagMap = std::map<std::string, std::string>;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kMetersPerLevel = 3.0;
inline constexpr double kDefaultBuildingHeightM = 9.0;
inline constexpr double kDefaultRoadWidthM = 6.0;

struct LayoutElement {
  std::string id;
  AssetCategory category = AssetCategory::Buildings;
  /// Closed categories: open counter-clockwise ring. Roads: polyline.
  std::vector<Vec2> footprint;
  /// Inner rings of multipolygons. Recorded, not extruded.
  std::vector<Ring> holes;
  double height_m = 0.0;
  double width_m = 0.0;
  TagMap tags;
};

struct GeoLayout {
  GeoPoint origin;
  std::vector<LayoutElement> elements;
  Rect bounds;
  /// Ways/relations skipped because their tags were unrecognized or geometry unusable.
  int warning_count = 0;
  std::vector<std::string> warnings;
};

/// Semantic class ids and heights on a W x H grid; row 0 is the northern edge.
struct RasterLayout {
  int width = 0;
  int height = 0;
  std::vector<int> semantic;
  std::vector<double> heights;
  double cell_size_m = 1.0;
};

/// class id -> category; nullopt marks an ignorable class. Class 0 is always background.
using ClassMap = std::map<int, std::optional<AssetCategory>>;

/// Tag-table categorization; nullopt for unmapped tag sets.
std::optional<AssetCategory> categorize(const TagMap& tags);

/// Equirectangular projection about `origin`, returns (east, north) meters.
Vec2 project_to_local(double lat, double lon, const GeoPoint& origin);

/// Parses an OSM XML document. Throws Error(Parse) on malformed XML or dangling node refs.
GeoLayout parse_osm(std::string_view xml);

/// Traces connected class regions of a raster layout into polygons.
GeoLayout parse_raster_layout(const RasterLayout& raster, const ClassMap& class_map);

/// Parses a numeric OSM length value such as "12", "12.5 m" or "40'". Returns nullopt if unparseable.
std::optional<double> parse_length_tag(std::string_view value);

}  // namespace urbanforge
