#pragma once

// Property checks shared by the texture unit tests and the acceptance suite.

#include <random>

#include "urbanforge/camera.hpp"
#include "urbanforge/raster.hpp"
#include "urbanforge/texture.hpp"
#include "urbanforge/uv_atlas.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace checks {

using namespace urbanforge;

/// Smooth color field over asset-local positions, period of several meters.
inline std::array<std::uint8_t, 3> pattern_color(const Vec3& p) {
  auto ch = [](double v) { return static_cast<std::uint8_t>(std::lround(127.5 + 100.0 * std::sin(v))); };
  return {ch(0.35 * p.x() + 0.2 * p.z()), ch(0.3 * p.y() - 0.25 * p.z() + 1.0), ch(0.2 * (p.x() + p.y()) + 2.0)};
}

/// Fully covered texture holding pattern_color at every atlas-valid texel.
inline UVTexture pattern_texture(const AssetMesh& mesh, const TexelMap& map) {
  UVTexture tex(map.width, map.height);
  for (std::size_t i = 0; i < map.face.size(); ++i) {
    if (!map.valid(i)) continue;
    const auto c = pattern_color(texel_surface_point(mesh, map, i));
    for (int k = 0; k < 3; ++k) tex.rgb.data[i * 3 + k] = c[k];
    tex.coverage[i] = 1;
  }
  return tex;
}

/// Texels whose 8 neighbours are valid and belong to the same island.
inline std::vector<std::uint8_t> off_seam(const UVAtlas& atlas, const TexelMap& map) {
  std::vector<std::uint8_t> out(map.face.size(), 0);
  for (int y = 1; y + 1 < map.height; ++y) {
    for (int x = 1; x + 1 < map.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      if (!map.valid(i)) continue;
      const int island = atlas.face_island[map.face[i]];
      bool ok = true;
      for (int dy = -1; dy <= 1 && ok; ++dy) {
        for (int dx = -1; dx <= 1 && ok; ++dx) {
          const std::size_t j = static_cast<std::size_t>(y + dy) * map.width + (x + dx);
          ok = map.valid(j) && atlas.face_island[map.face[j]] == island;
        }
      }
      out[i] = ok;
    }
  }
  return out;
}

struct RoundTrip {
  double recovered_fraction = 0;  // covered valid texels / valid texels, before inpainting
  double inpainted_fraction = 0;  // after inpainting
  double mean_abs_error = 0;      // per channel, 0..255, over covered off-seam texels
  std::size_t compared = 0;
};

/// Renders the pattern-textured mesh from the rig, back-projects every view onto the atlas,
/// merges, and compares against the source pattern.
inline RoundTrip round_trip(const AssetMesh& mesh, int atlas_res, int n_views) {
  const UVAtlas atlas = unwrap_uv(mesh, atlas_res, atlas_res);
  const TexelMap map = build_texel_map(atlas);
  const UVTexture source = pattern_texture(mesh, map);
  const RgbImage albedo = dilate_gutter(source, 4);
  std::vector<UVTexture> textures;
  std::vector<ViewMask> masks;
  for (const CameraView& view : make_camera_rig(mesh, n_views)) {
    const FrameBuffer fb = rasterize(mesh, view, Shading::textured(atlas.face_uvs, albedo));
    auto r = backproject(view, fb.rgb, mesh, map, fb);
    textures.push_back(std::move(r.texture));
    masks.push_back(std::move(r.mask));
  }
  const UVTexture merged = merge_views(textures, masks);
  const UVTexture filled = inpaint_uv(merged, build_position_map(mesh, map));
  const auto interior = off_seam(atlas, map);
  RoundTrip out;
  std::size_t valid = 0, covered = 0, filled_n = 0;
  double err = 0;
  for (std::size_t i = 0; i < map.face.size(); ++i) {
    if (!map.valid(i)) continue;
    ++valid;
    filled_n += filled.coverage[i] != 0;
    if (!merged.coverage[i]) continue;
    ++covered;
    if (!interior[i]) continue;
    for (int k = 0; k < 3; ++k) err += std::abs(int(merged.rgb.data[i * 3 + k]) - int(source.rgb.data[i * 3 + k]));
    out.compared += 3;
  }
  out.recovered_fraction = double(covered) / double(valid);
  out.inpainted_fraction = double(filled_n) / double(valid);
  out.mean_abs_error = out.compared ? err / double(out.compared) : 0.0;
  return out;
}

/// Counts texels where the disjoint masks overlap, and texels where their union differs from
/// the union of the input masks, on a random building seen from a random rig.
inline std::pair<std::size_t, std::size_t> partition_violations(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> sides(3, 9), views(2, 6);
  std::uniform_real_distribution<double> size(3.0, 15.0), height(2.0, 30.0);
  AssetMesh mesh = extrude_building(fixture::building(fixture::random_convex(rng, sides(rng), size(rng)), height(rng)));
  center_mesh(mesh);
  const UVAtlas atlas = unwrap_uv(mesh, 96, 96);
  const TexelMap map = build_texel_map(atlas);
  const int n = views(rng);
  std::vector<CameraView> rig = make_camera_rig(mesh, n);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  std::vector<ViewMask> masks;
  std::vector<UVTexture> textures;
  for (CameraView v : rig) {
    v.eye += Vec3(jitter(rng), jitter(rng), jitter(rng)) * v.eye.norm() * 0.2;
    v.width = v.height = 96;
    const FrameBuffer fb = rasterize(mesh, v);
    auto r = backproject(v, fb.rgb, mesh, map, fb);
    masks.push_back(std::move(r.mask));
    textures.push_back(std::move(r.texture));
  }
  const auto disjoint = disjoint_masks(masks);
  const UVTexture merged = merge_views(textures, masks);
  std::size_t overlaps = 0, union_mismatch = 0;
  for (std::size_t i = 0; i < map.face.size(); ++i) {
    int in_disjoint = 0;
    bool in_union = false;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      in_disjoint += disjoint[k].mask[i] != 0;
      in_union = in_union || masks[k].mask[i] != 0;
    }
    overlaps += in_disjoint > 1;
    union_mismatch += (in_disjoint == 1) != in_union;
    union_mismatch += (merged.coverage[i] != 0) != in_union;
  }
  return {overlaps, union_mismatch};
}

/// Distance from a point to a closed polygon's boundary.
inline double boundary_distance(const Vec2& p, const std::vector<Vec2>& poly) {
  double best = INFINITY;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 a = poly[k], b = poly[(k + 1) % poly.size()];
    const Vec2 e = b - a;
    const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (a + t * e - p).norm());
  }
  return best;
}

inline Vec2 pinhole_project(const CameraView& v, const Vec3& p) {
  const Vec3 f = (v.target - v.eye).normalized();
  const Vec3 r = f.cross(v.up).normalized();
  const Vec3 u = r.cross(f);
  const double focal = 0.5 * v.height / std::tan(0.5 * v.fov_y_deg * M_PI / 180.0);
  const Vec3 c = p - v.eye;
  return {0.5 * v.width + focal * c.dot(r) / c.dot(f), 0.5 * v.height - focal * c.dot(u) / c.dot(f)};
}

struct OcclusionResult {
  std::size_t accepted_lower = 0;
  std::size_t hidden_accepted = 0;
};

/// Stacked quads seen from a random camera above: counts lower-quad texels accepted although
/// the upper quad hides them by more than `margin_px` pixels.
inline OcclusionResult stacked_quad_occlusion(std::uint64_t seed, double margin_px) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> az(0, 2 * M_PI), el(20 * M_PI / 180, 85 * M_PI / 180), dist(3.0, 8.0);
  const AssetMesh mesh = fixture::stacked_quads();
  const UVAtlas atlas = unwrap_uv(mesh, 128, 128);
  const TexelMap map = build_texel_map(atlas);
  CameraView v;
  const double a = az(rng), e = el(rng), d = dist(rng);
  v.eye = d * Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
  v.target = Vec3(0, 0, 0.3);
  v.up = Vec3::UnitZ();
  v.fov_y_deg = 50;
  v.near = 0.05;
  v.far = 50;
  v.width = v.height = 160;
  const FrameBuffer fb = rasterize(mesh, v);
  const RgbImage patch(v.width, v.height, 3, 200);
  const auto r = backproject(v, patch, mesh, map, fb);
  std::vector<Vec2> upper;
  for (int k = 4; k < 8; ++k) upper.push_back(pinhole_project(v, mesh.vertices[k]));
  OcclusionResult out;
  for (std::size_t i = 0; i < map.face.size(); ++i) {
    if (!map.valid(i) || map.face[i] >= 2 || !r.mask.mask[i]) continue;
    ++out.accepted_lower;
    const Vec3 p = texel_surface_point(mesh, map, i);
    const Vec3 dir = p - v.eye;
    bool hidden = false;
    for (int f = 2; f < 4; ++f) {
      const auto& t = mesh.faces[f];
      const double h = oracle::ray_triangle(v.eye, dir, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
      hidden = hidden || h < 1.0;
    }
    if (hidden && boundary_distance(pinhole_project(v, p), upper) >= margin_px) ++out.hidden_accepted;
  }
  return out;
}

}  // namespace checks
