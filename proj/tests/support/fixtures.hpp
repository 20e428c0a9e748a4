#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "urbanforge/assembly.hpp"
#include "urbanforge/layout.hpp"
#include "urbanforge/mesh.hpp"
#include "urbanforge/texturing.hpp"

#ifndef URBANFORGE_FIXTURE_DIR
#define URBANFORGE_FIXTURE_DIR "tests/fixtures"
#endif

namespace fixture {

using namespace urbanforge;

inline std::filesystem::path path(const std::string& name) { return std::filesystem::path(URBANFORGE_FIXTURE_DIR) / name; }

inline AssetMesh make_mesh(std::string id, AssetCategory cat, std::vector<Vec3> verts, std::vector<Tri> faces) {
  AssetMesh m;
  m.id = std::move(id);
  m.category = cat;
  m.vertices = std::move(verts);
  m.faces = std::move(faces);
  compute_face_normals(m);
  return m;
}

/// Closed axis-aligned box with outward-facing triangles.
inline AssetMesh box(const Vec3& lo, const Vec3& hi, std::string id = "box", AssetCategory cat = AssetCategory::Buildings) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z());
  const std::vector<Tri> f = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                              {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return make_mesh(std::move(id), cat, std::move(v), f);
}

/// Square quad in the plane z = `z`, normal +Z.
inline AssetMesh quad_z(double half, double z, std::string id = "quad") {
  return make_mesh(std::move(id), AssetCategory::Buildings,
                   {{-half, -half, z}, {half, -half, z}, {half, half, z}, {-half, half, z}}, {{0, 1, 2}, {0, 2, 3}});
}

/// Upper quad (half-size 0.5 at z = 1) over a lower quad (half-size 1 at z = 0), both facing up.
/// Lower-quad faces are 0 and 1; the upper quad is faces 2 and 3.
inline AssetMesh stacked_quads() {
  return make_mesh("stack", AssetCategory::Buildings,
                   {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}, {-0.5, -0.5, 1}, {0.5, -0.5, 1}, {0.5, 0.5, 1}, {-0.5, 0.5, 1}},
                   {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}});
}

inline LayoutElement building(std::vector<Vec2> ring, double height, std::string id = "b") {
  LayoutElement e;
  e.id = std::move(id);
  e.category = AssetCategory::Buildings;
  e.footprint = std::move(ring);
  e.height_m = height;
  return e;
}

inline std::vector<Vec2> regular_polygon(int n, double radius, const Vec2& center = Vec2::Zero(), double phase = 0.0) {
  std::vector<Vec2> ring;
  for (int i = 0; i < n; ++i) {
    const double a = phase + 2 * M_PI * i / n;
    ring.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
  }
  return ring;
}

/// Random convex polygon: sorted random angles on a jittered circle.
inline std::vector<Vec2> random_convex(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  std::vector<double> a(n);
  for (auto& x : a) x = ang(rng);
  std::sort(a.begin(), a.end());
  std::vector<Vec2> ring;
  for (double x : a) ring.emplace_back(radius * std::cos(x), radius * std::sin(x));
  return ring;
}

/// Building prism over a centered square footprint (walls plus roof, no floor).
inline AssetMesh building_box(double side, double height, const std::string& id = "bldg") {
  AssetMesh m = extrude_building(building({{0, 0}, {side, 0}, {side, side}, {0, side}}, height, id));
  center_mesh(m);
  return m;
}

inline TexturingConfig fast_texturing(int atlas = 256) {
  TexturingConfig cfg;
  cfg.atlas_resolution = atlas;
  return cfg;
}

/// Textures every plan asset procedurally and reassembles the manifest.
inline SceneManifest textured_manifest(const ScenePlan& plan, int atlas = 128, std::uint64_t seed = 7) {
  std::map<std::string, TexturedAsset> tex;
  for (const AssetMesh* m : plan.all_meshes()) {
    tex.emplace(m->id, texture_asset(std::make_shared<const AssetMesh>(*m), m->id + " surface", seed, fast_texturing(atlas)));
  }
  return reassemble(plan, tex);
}

/// Plan over the given centered assets with a ground quad covering them plus `margin`.
inline ScenePlan plan_of(std::vector<AssetMesh> assets, double margin = 2.0) {
  GeoLayout layout;
  Vec2 lo(INFINITY, INFINITY), hi(-INFINITY, -INFINITY);
  for (const auto& a : assets) {
    for (const auto& v : a.vertices) {
      const Vec3 w = v + a.center_world;
      lo = lo.cwiseMin(w.head<2>());
      hi = hi.cwiseMax(w.head<2>());
    }
  }
  if (assets.empty()) lo = hi = Vec2::Zero();
  layout.bounds = {lo - Vec2::Constant(margin), hi + Vec2::Constant(margin)};
  ScenePlan plan = assemble_scene_plan(layout);
  plan.assets = std::move(assets);
  return plan;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("urbanforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixture
