#include "urbanforge/uv_atlas.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <numeric>

#include "urbanforge/error.hpp"
#include "urbanforge/tri_fill.hpp"

namespace urbanforge {

namespace {

constexpr double kOverlapEps = 1e-7;
constexpr double kShrink = 0.95;
constexpr int kMaxPackAttempts = 100;
constexpr double kFillTarget = 0.7;

using Tri2 = std::array<Vec2, 3>;

struct Bounds2 {
  Vec2 lo, hi;
};

Bounds2 tri_bounds(const Tri2& t) {
  Bounds2 b{t[0], t[0]};
  for (const auto& p : t) {
    b.lo = b.lo.cwiseMin(p);
    b.hi = b.hi.cwiseMax(p);
  }
  return b;
}

double tri_area2(const Tri2& t) {
  return (t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x();
}

// Separating-axis test on interiors; touching triangles do not overlap.
bool interiors_overlap(const Tri2& a, const Tri2& b) {
  if (std::abs(tri_area2(a)) <= kOverlapEps * kOverlapEps || std::abs(tri_area2(b)) <= kOverlapEps * kOverlapEps)
    return false;
  for (const Tri2* t : {&a, &b}) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 e = (*t)[(k + 1) % 3] - (*t)[k];
      const Vec2 n(-e.y(), e.x());
      const double len = n.norm();
      if (len == 0) continue;
      double amin = INFINITY, amax = -INFINITY, bmin = INFINITY, bmax = -INFINITY;
      for (const auto& p : a) {
        amin = std::min(amin, n.dot(p));
        amax = std::max(amax, n.dot(p));
      }
      for (const auto& p : b) {
        bmin = std::min(bmin, n.dot(p));
        bmax = std::max(bmax, n.dot(p));
      }
      if (amax <= bmin + kOverlapEps * len || bmax <= amin + kOverlapEps * len) return false;
    }
  }
  return true;
}

void island_basis(UVIsland& isl) {
  const Vec3 t = std::abs(isl.axis.z()) < 0.99 ? Vec3::UnitZ() : Vec3::UnitX();
  isl.u_axis = t.cross(isl.axis).normalized();
  isl.v_axis = isl.axis.cross(isl.u_axis);
}

Tri2 project_face(const AssetMesh& mesh, int f, const UVIsland& isl) {
  Tri2 out;
  for (int c = 0; c < 3; ++c) {
    const Vec3& p = mesh.vertices[mesh.faces[f][c]];
    out[c] = Vec2(p.dot(isl.u_axis), p.dot(isl.v_axis));
  }
  return out;
}

// Shelf packing in order of decreasing height. Returns false on overflow.
bool pack(std::vector<UVIsland>& islands, double density, int width, int height) {
  for (auto& isl : islands) {
    isl.w = static_cast<int>(std::ceil(isl.extent.x() * density)) + 2 * kIslandPadding;
    isl.h = static_cast<int>(std::ceil(isl.extent.y() * density)) + 2 * kIslandPadding;
    if (isl.w > width || isl.h > height) return false;
  }
  std::vector<std::size_t> order(islands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return islands[a].h > islands[b].h; });
  int x = 0, y = 0, shelf = 0;
  for (std::size_t i : order) {
    UVIsland& isl = islands[i];
    if (x + isl.w > width) {
      y += shelf;
      x = 0;
      shelf = 0;
    }
    if (y + isl.h > height) return false;
    isl.x = x;
    isl.y = y;
    x += isl.w;
    shelf = std::max(shelf, isl.h);
  }
  return true;
}

}  // namespace

Vec2 UVIsland::to_texel(const Vec3& p, double texels_per_meter) const {
  return {x + kIslandPadding + (p.dot(u_axis) - min_u) * texels_per_meter,
          y + kIslandPadding + (max_v - p.dot(v_axis)) * texels_per_meter};
}

UVAtlas unwrap_uv(const AssetMesh& mesh, int width, int height, const UnwrapOptions& opts) {
  if (mesh.empty()) throw Error(ErrorCode::DegenerateGeometry, mesh.id + ": cannot unwrap an empty mesh");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Shape, "atlas resolution must be positive");
  const int n = static_cast<int>(mesh.faces.size());

  std::vector<double> area(n);
  std::vector<Vec3> normal(n);
  for (int f = 0; f < n; ++f) {
    const Vec3& a = mesh.vertices[mesh.faces[f][0]];
    const Vec3& b = mesh.vertices[mesh.faces[f][1]];
    const Vec3& c = mesh.vertices[mesh.faces[f][2]];
    const Vec3 cr = (b - a).cross(c - a);
    area[f] = 0.5 * cr.norm();
    normal[f] = area[f] > 0 ? Vec3(cr.normalized()) : Vec3(Vec3::UnitZ());
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return area[a] > area[b]; });

  // Greedy clustering by angle to the seed normal.
  const double cos_limit = std::cos(opts.angle_limit_deg * std::numbers::pi / 180.0);
  std::vector<int> cluster_of(n, -1);
  std::vector<std::vector<int>> clusters;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int seed = order[i];
    if (cluster_of[seed] >= 0) continue;
    const int cid = static_cast<int>(clusters.size());
    clusters.emplace_back();
    for (std::size_t j = i; j < order.size(); ++j) {
      const int g = order[j];
      if (cluster_of[g] < 0 && normal[g].dot(normal[seed]) >= cos_limit) {
        cluster_of[g] = cid;
        clusters.back().push_back(g);
      }
    }
  }

  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (int f = 0; f < n; ++f) {
    for (int c = 0; c < 3; ++c) {
      const int a = mesh.faces[f][c];
      const int b = mesh.faces[f][(c + 1) % 3];
      edge_faces[{std::min(a, b), std::max(a, b)}].push_back(f);
    }
  }

  UVAtlas atlas;
  atlas.width = width;
  atlas.height = height;
  atlas.face_island.assign(n, -1);
  atlas.face_uvs.resize(n);

  for (const auto& cluster : clusters) {
    Vec3 axis = Vec3::Zero();
    for (int f : cluster) axis += area[f] * normal[f];
    axis = axis.norm() > 0 ? Vec3(axis.normalized()) : normal[cluster.front()];

    for (int seed : cluster) {
      if (atlas.face_island[seed] >= 0) continue;
      const int iid = static_cast<int>(atlas.islands.size());
      UVIsland isl;
      isl.axis = normal[seed].dot(axis) > 1e-9 ? axis : normal[seed];
      island_basis(isl);

      std::vector<Tri2> placed;
      std::vector<Bounds2> placed_bounds;
      auto place = [&](int f, const Tri2& t) {
        atlas.face_island[f] = iid;
        isl.faces.push_back(f);
        placed.push_back(t);
        placed_bounds.push_back(tri_bounds(t));
      };
      place(seed, project_face(mesh, seed, isl));

      std::deque<int> queue{seed};
      while (!queue.empty()) {
        const int f = queue.front();
        queue.pop_front();
        for (int c = 0; c < 3; ++c) {
          const int a = mesh.faces[f][c];
          const int b = mesh.faces[f][(c + 1) % 3];
          for (int g : edge_faces[{std::min(a, b), std::max(a, b)}]) {
            if (atlas.face_island[g] >= 0 || cluster_of[g] != cluster_of[seed]) continue;
            if (area[g] > 0 && normal[g].dot(isl.axis) <= 1e-9) continue;
            const Tri2 t = project_face(mesh, g, isl);
            const Bounds2 tb = tri_bounds(t);
            bool clash = false;
            for (std::size_t k = 0; k < placed.size() && !clash; ++k) {
              const Bounds2& pb = placed_bounds[k];
              if (tb.hi.x() <= pb.lo.x() || pb.hi.x() <= tb.lo.x() || tb.hi.y() <= pb.lo.y() || pb.hi.y() <= tb.lo.y())
                continue;
              clash = interiors_overlap(t, placed[k]);
            }
            if (clash) continue;
            place(g, t);
            queue.push_back(g);
          }
        }
      }

      Vec2 lo = placed_bounds.front().lo, hi = placed_bounds.front().hi;
      for (const auto& b : placed_bounds) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
      }
      isl.min_u = lo.x();
      isl.max_v = hi.y();
      isl.extent = hi - lo;
      atlas.islands.push_back(std::move(isl));
    }
  }

  double density = opts.texels_per_meter;
  int attempts = 1;
  if (density <= 0) {
    double bbox_area = 0;
    for (const auto& isl : atlas.islands) bbox_area += isl.extent.x() * isl.extent.y();
    density = bbox_area > 0 ? std::sqrt(kFillTarget * width * height / bbox_area) : 1.0;
    for (const auto& isl : atlas.islands) {
      if (isl.extent.x() > 0) density = std::min(density, (width - 2 * kIslandPadding) / isl.extent.x());
      if (isl.extent.y() > 0) density = std::min(density, (height - 2 * kIslandPadding) / isl.extent.y());
    }
    attempts = kMaxPackAttempts;
  }
  bool ok = false;
  for (int k = 0; k < attempts && !(ok = pack(atlas.islands, density, width, height)); ++k) density *= kShrink;
  if (!ok)
    throw Error(ErrorCode::AtlasOverflow, mesh.id + ": " + std::to_string(atlas.islands.size()) +
                                              " islands do not fit a " + std::to_string(width) + "x" +
                                              std::to_string(height) + " atlas");
  atlas.texels_per_meter = density;

  for (const auto& isl : atlas.islands) {
    for (int f : isl.faces) {
      for (int c = 0; c < 3; ++c) {
        const Vec2 t = isl.to_texel(mesh.vertices[mesh.faces[f][c]], density);
        atlas.face_uvs[f][c] = Vec2(t.x() / width, t.y() / height);
      }
    }
  }
  return atlas;
}

std::size_t TexelMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(face.begin(), face.end(), [](std::int32_t f) { return f >= 0; }));
}

TexelMap build_texel_map(const std::vector<FaceUVs>& face_uvs, int width, int height) {
  TexelMap map;
  map.width = width;
  map.height = height;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  map.face.assign(count, -1);
  map.bary.assign(count, {0.0f, 0.0f, 0.0f});
  for (std::size_t f = 0; f < face_uvs.size(); ++f) {
    const auto& uv = face_uvs[f];
    std::array<FixedPoint2, 3> p;
    for (int c = 0; c < 3; ++c) p[c] = to_fixed(Vec2(uv[c].x() * width, uv[c].y() * height));
    fill_triangle(p[0], p[1], p[2], width, height, [&](int x, int y, double l0, double l1, double l2) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (map.face[i] >= 0) return;
      map.face[i] = static_cast<std::int32_t>(f);
      map.bary[i] = {static_cast<float>(l0), static_cast<float>(l1), static_cast<float>(l2)};
    });
  }
  return map;
}

}  // namespace urbanforge
