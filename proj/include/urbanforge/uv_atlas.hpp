#pragma once

#include <cstdint>
#include <vector>

#include "urbanforge/mesh.hpp"
#include "urbanforge/raster.hpp"

namespace urbanforge {

inline constexpr double kClusterAngleDeg = 66.0;
inline constexpr int kIslandPadding = 1;
inline constexpr int kDefaultAtlasResolution = 1024;

/// A chart of edge-connected faces projected orthographically along `axis`.
struct UVIsland {
  std::vector<int> faces;
  Vec3 axis = Vec3::UnitZ();
  Vec3 u_axis = Vec3::UnitX();
  Vec3 v_axis = Vec3::UnitY();
  /// Projected extent in meters: u in [min_u, min_u + extent.x], v in [max_v - extent.y, max_v].
  double min_u = 0.0;
  double max_v = 0.0;
  Vec2 extent = Vec2::Zero();
  /// Packed rectangle in texels, padding included.
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  /// Asset-local point -> texel coordinates (x right, y down).
  Vec2 to_texel(const Vec3& p, double texels_per_meter) const;
};

struct UVAtlas {
  int width = 0;
  int height = 0;
  double texels_per_meter = 0.0;
  /// Per face, corner UVs in [0,1]^2 with v growing down the image.
  std::vector<FaceUVs> face_uvs;
  std::vector<UVIsland> islands;
  std::vector<int> face_island;
};

struct UnwrapOptions {
  double angle_limit_deg = kClusterAngleDeg;
  /// Fixed density; 0 picks the largest density that packs (shrinking by 5% per attempt).
  double texels_per_meter = 0.0;
};

/// Normal-clustered orthographic unwrap with shelf packing. Throws AtlasOverflow when the
/// islands do not fit, DegenerateGeometry for an empty mesh.
UVAtlas unwrap_uv(const AssetMesh& mesh, int width, int height, const UnwrapOptions& opts = {});

/// Per-texel preimage: owning face and barycentrics (texel centers inside a face's UV triangle).
struct TexelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> face;
  std::vector<std::array<float, 3>> bary;

  bool valid(std::size_t i) const { return face[i] >= 0; }
  std::size_t valid_count() const;
};

TexelMap build_texel_map(const std::vector<FaceUVs>& face_uvs, int width, int height);
inline TexelMap build_texel_map(const UVAtlas& atlas) { return build_texel_map(atlas.face_uvs, atlas.width, atlas.height); }

/// Surface point of a texel's preimage in asset-local coordinates.
inline Vec3 texel_surface_point(const AssetMesh& mesh, const TexelMap& map, std::size_t i) {
  const Tri& f = mesh.faces[map.face[i]];
  const auto& b = map.bary[i];
  return b[0] * mesh.vertices[f[0]] + b[1] * mesh.vertices[f[1]] + b[2] * mesh.vertices[f[2]];
}

}  // namespace urbanforge
