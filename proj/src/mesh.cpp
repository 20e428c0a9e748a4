#include "urbanforge/mesh.hpp"

#include <cmath>

#include "urbanforge/error.hpp"
#include "urbanforge/polygon.hpp"

namespace urbanforge {

std::vector<const AssetMesh*> ScenePlan::all_meshes() const {
  std::vector<const AssetMesh*> out;
  out.reserve(assets.size() + 1);
  for (const auto& a : assets) out.push_back(&a);
  out.push_back(&ground);
  return out;
}

Box3 bounding_box(const std::vector<Vec3>& pts) {
  Box3 b;
  if (pts.empty()) return b;
  b.min = b.max = pts.front();
  for (const auto& p : pts) {
    b.min = b.min.cwiseMin(p);
    b.max = b.max.cwiseMax(p);
  }
  return b;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

double surface_area(const AssetMesh& mesh) {
  double sum = 0;
  for (const auto& f : mesh.faces) sum += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
  return sum;
}

void compute_face_normals(AssetMesh& mesh) {
  mesh.face_normals.clear();
  mesh.face_normals.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    const double len = n.norm();
    mesh.face_normals.push_back(len > 0 ? Vec3(n / len) : Vec3::UnitZ());
  }
}

void center_mesh(AssetMesh& mesh) {
  if (mesh.vertices.empty()) return;
  const Vec3 c = bounding_box(mesh.vertices).center();
  for (auto& v : mesh.vertices) v -= c;
  mesh.center_world += c;
}

namespace {

Ring checked_ring(const LayoutElement& e) {
  Ring ring = poly::normalize_ring(e.footprint);
  if (ring.size() < 3) throw Error(ErrorCode::DegenerateGeometry, e.id + ": fewer than 3 distinct vertices");
  if (!poly::is_simple(ring)) throw Error(ErrorCode::DegenerateGeometry, e.id + ": self-intersecting footprint");
  return ring;
}

void add_cap(AssetMesh& mesh, const Ring& ring, double z) {
  const int base = static_cast<int>(mesh.vertices.size());
  for (const auto& p : ring) mesh.vertices.emplace_back(p.x(), p.y(), z);
  for (const auto& t : poly::ear_clip(ring)) mesh.faces.emplace_back(base + t[0], base + t[1], base + t[2]);
}

// Outward-facing walls between z0 and z1 along a counter-clockwise ring.
void add_walls(AssetMesh& mesh, const Ring& ring, double z0, double z1) {
  const int n = static_cast<int>(ring.size());
  const int base = static_cast<int>(mesh.vertices.size());
  for (const auto& p : ring) mesh.vertices.emplace_back(p.x(), p.y(), z0);
  for (const auto& p : ring) mesh.vertices.emplace_back(p.x(), p.y(), z1);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    mesh.faces.emplace_back(base + i, base + j, base + n + j);
    mesh.faces.emplace_back(base + i, base + n + j, base + n + i);
  }
}

}  // namespace

AssetMesh extrude_building(const LayoutElement& element) {
  if (!(element.height_m > 0)) throw Error(ErrorCode::DegenerateGeometry, element.id + ": non-positive height");
  const Ring ring = checked_ring(element);
  const int n = static_cast<int>(ring.size());
  AssetMesh mesh;
  mesh.id = element.id;
  mesh.category = AssetCategory::Buildings;
  add_walls(mesh, ring, 0.0, element.height_m);
  // Roof reuses the top ring vertices [n, 2n).
  for (const auto& t : poly::ear_clip(ring)) mesh.faces.emplace_back(n + t[0], n + t[1], n + t[2]);
  compute_face_normals(mesh);
  return mesh;
}

AssetMesh build_road(const LayoutElement& element) {
  const auto line = poly::dedupe(element.footprint, false);
  if (line.size() < 2) throw Error(ErrorCode::DegenerateGeometry, element.id + ": zero-length polyline");
  if (!(element.width_m > 0)) throw Error(ErrorCode::DegenerateGeometry, element.id + ": non-positive road width");
  const double hw = element.width_m / 2;
  const std::size_t m = line.size();

  auto left_normal = [](const Vec2& d) { return Vec2(-d.y(), d.x()).normalized(); };
  AssetMesh mesh;
  mesh.id = element.id;
  mesh.category = AssetCategory::RoadsPaths;
  for (std::size_t i = 0; i < m; ++i) {
    Vec2 offset;
    if (i == 0) {
      offset = left_normal(line[1] - line[0]) * hw;
    } else if (i == m - 1) {
      offset = left_normal(line[m - 1] - line[m - 2]) * hw;
    } else {
      const Vec2 n1 = left_normal(line[i] - line[i - 1]);
      const Vec2 n2 = left_normal(line[i + 1] - line[i]);
      Vec2 miter = n1 + n2;
      if (miter.norm() < 1e-12) {
        miter = n1;  // full reversal
      }
      miter.normalize();
      const double cos_half = miter.dot(n1);
      const double len = std::min(hw / std::max(cos_half, 1e-12), kMiterLimit * hw);
      offset = miter * len;
    }
    const Vec2 l = line[i] + offset;
    const Vec2 r = line[i] - offset;
    mesh.vertices.emplace_back(l.x(), l.y(), kRoadZ);  // 2i: left
    mesh.vertices.emplace_back(r.x(), r.y(), kRoadZ);  // 2i+1: right
  }
  for (int i = 0; i + 1 < static_cast<int>(m); ++i) {
    const int li = 2 * i, ri = 2 * i + 1, lj = 2 * i + 2, rj = 2 * i + 3;
    mesh.faces.emplace_back(ri, rj, lj);
    mesh.faces.emplace_back(ri, lj, li);
  }
  compute_face_normals(mesh);
  return mesh;
}

AssetMesh build_area(const LayoutElement& element) {
  const Ring ring = checked_ring(element);
  AssetMesh mesh;
  mesh.id = element.id;
  mesh.category = element.category;
  switch (element.category) {
    case AssetCategory::ForestVegetation:
      add_cap(mesh, ring, kVegetationZ);
      add_walls(mesh, ring, kVegetationZ, kVegetationZ + kVegetationRimM);
      break;
    case AssetCategory::RoadsPaths:
      add_cap(mesh, ring, kRoadZ);
      break;
    case AssetCategory::Water:
      add_cap(mesh, ring, kWaterZ);
      break;
    default:
      add_cap(mesh, ring, 0.0);
      break;
  }
  compute_face_normals(mesh);
  return mesh;
}

ScenePlan assemble_scene_plan(const GeoLayout& layout) {
  ScenePlan plan;
  plan.layout_bounds = layout.bounds;
  for (const auto& e : layout.elements) {
    try {
      AssetMesh mesh;
      switch (e.category) {
        case AssetCategory::Buildings:
          mesh = extrude_building(e);
          break;
        case AssetCategory::RoadsPaths: {
          auto it = e.tags.find("area");
          mesh = (it != e.tags.end() && it->second == "yes") ? build_area(e) : build_road(e);
          break;
        }
        default:
          mesh = build_area(e);
          break;
      }
      center_mesh(mesh);
      plan.assets.push_back(std::move(mesh));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateGeometry) throw;
      plan.failures.push_back({e.id, err.what()});
    }
  }

  // Ground: a quad over the layout bounds, at least 1 m on a side.
  Rect r = layout.bounds;
  const Vec2 c = r.center();
  const Vec2 half = r.size().cwiseMax(Vec2(1.0, 1.0)) / 2;
  AssetMesh& g = plan.ground;
  g.id = "ground";
  g.category = AssetCategory::Ground;
  g.vertices = {Vec3(c.x() - half.x(), c.y() - half.y(), 0), Vec3(c.x() + half.x(), c.y() - half.y(), 0),
                Vec3(c.x() + half.x(), c.y() + half.y(), 0), Vec3(c.x() - half.x(), c.y() + half.y(), 0)};
  g.faces = {Tri(0, 1, 2), Tri(0, 2, 3)};
  compute_face_normals(g);
  center_mesh(g);
  return plan;
}

}  // namespace urbanforge
