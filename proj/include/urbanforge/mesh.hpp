#pragma once

#include <string>
#include <vector>

#include "urbanforge/core.hpp"
#include "urbanforge/layout.hpp"

namespace urbanforge {

inline constexpr double kRoadZ = 0.05;
inline constexpr double kVegetationZ = 0.03;
inline constexpr double kWaterZ = 0.02;
inline constexpr double kVegetationRimM = 0.3;
inline constexpr double kMiterLimit = 4.0;

/// Triangle mesh of one asset in its local frame (bounding-box center at the origin).
struct AssetMesh {
  std::string id;
  AssetCategory category = AssetCategory::Buildings;
  std::vector<Vec3> vertices;
  std::vector<Tri> faces;
  std::vector<Vec3> face_normals;
  /// Translation from the asset-local frame to the scene frame.
  Vec3 center_world = Vec3::Zero();

  bool empty() const { return faces.empty(); }
  bool operator==(const AssetMesh&) const = default;
};

struct MeshFailure {
  std::string element_id;
  std::string message;
};

struct ScenePlan {
  std::vector<AssetMesh> assets;
  AssetMesh ground;
  Rect layout_bounds;
  std::vector<MeshFailure> failures;

  /// Assets followed by the ground plane.
  std::vector<const AssetMesh*> all_meshes() const;
};

Box3 bounding_box(const std::vector<Vec3>& pts);
double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double surface_area(const AssetMesh& mesh);
/// Recomputes unit face normals from winding; zero-area faces get +Z.
void compute_face_normals(AssetMesh& mesh);
/// Moves the mesh so its bounding-box center is the origin; accumulates the shift into center_world.
void center_mesh(AssetMesh& mesh);

/// Prism over a simple counter-clockwise footprint: walls plus ear-clipped roof, no floor.
/// Output is in layout coordinates (not yet centered).
AssetMesh extrude_building(const LayoutElement& element);
/// Flat ribbon along the polyline with mitered joins.
AssetMesh build_road(const LayoutElement& element);
/// Flat ear-clipped area; vegetation additionally gets a rim wall.
AssetMesh build_area(const LayoutElement& element);

/// Meshes every element, centers each asset, and adds a ground plane over the layout bounds.
/// Per-element geometry failures are recorded in ScenePlan::failures.
ScenePlan assemble_scene_plan(const GeoLayout& layout);

}  // namespace urbanforge
