#include "urbanforge/raster.hpp"

#include <algorithm>
#include <cmath>

#include "urbanforge/tri_fill.hpp"

namespace urbanforge {

std::array<std::uint8_t, 3> category_color(AssetCategory c) {
  switch (c) {
    case AssetCategory::Buildings: return {190, 170, 150};
    case AssetCategory::RoadsPaths: return {90, 90, 95};
    case AssetCategory::ForestVegetation: return {70, 130, 60};
    case AssetCategory::Water: return {60, 110, 170};
    case AssetCategory::Ground: return {150, 145, 130};
  }
  return {128, 128, 128};
}

namespace {

constexpr double kGuardBand = 2.0;

// Vertex after transformation to camera space, carrying barycentrics of the source face.
struct ClipVertex {
  Vec3 cam;
  Vec3 bary;
};

// Sutherland-Hodgman against a plane dot(n, cam) + d >= 0.
std::vector<ClipVertex> clip_polygon(const std::vector<ClipVertex>& in, const Vec3& n, double d) {
  std::vector<ClipVertex> out;
  if (in.empty()) return out;
  out.reserve(in.size() + 2);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % in.size()];
    const double da = n.dot(a.cam) + d;
    const double db = n.dot(b.cam) + d;
    if (da >= 0) out.push_back(a);
    if ((da >= 0) != (db >= 0)) {
      const double t = da / (da - db);
      out.push_back({a.cam + t * (b.cam - a.cam), a.bary + t * (b.bary - a.bary)});
    }
  }
  return out;
}

}  // namespace

Rasterizer::Rasterizer(const CameraView& view)
    : view_(view),
      right_(view.right()),
      up_(view.right().cross(view.forward())),
      forward_(view.forward()),
      focal_(view.focal_px()),
      fb_(view.width, view.height) {
  view_.validate();
}

void Rasterizer::draw(const AssetMesh& mesh, const Vec3& translation, const Shading& shading,
                      std::int32_t face_id_offset) {
  const int w = fb_.width;
  const int h = fb_.height;
  const double tan_x = (w / 2.0) / focal_ * kGuardBand;
  const double tan_y = (h / 2.0) / focal_ * kGuardBand;
  const std::uint8_t semantic = static_cast<std::uint8_t>(mesh.category);
  const auto base_color = shading.kind == Shading::Kind::Flat ? shading.color : category_color(mesh.category);
  const bool textured = shading.kind == Shading::Kind::Textured && shading.texture &&
                        shading.face_uvs.size() == mesh.faces.size();

  // Clip planes in camera space: near, far, and a guard band on the sides.
  const std::array<std::pair<Vec3, double>, 6> planes = {{
      {Vec3(0, 0, 1), -view_.near},
      {Vec3(0, 0, -1), view_.far},
      {Vec3(1, 0, tan_x), 0.0},
      {Vec3(-1, 0, tan_x), 0.0},
      {Vec3(0, 1, tan_y), 0.0},
      {Vec3(0, -1, tan_y), 0.0},
  }};

  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 d = mesh.vertices[i] + translation - view_.eye;
    cam[i] = Vec3(d.dot(right_), d.dot(up_), d.dot(forward_));
  }

  std::array<double, 3> texel{};
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Tri& f = mesh.faces[fi];
    std::vector<ClipVertex> polygon = {{cam[f[0]], Vec3(1, 0, 0)}, {cam[f[1]], Vec3(0, 1, 0)}, {cam[f[2]], Vec3(0, 0, 1)}};
    for (const auto& [n, d] : planes) {
      bool all_inside = true;
      for (const auto& v : polygon) all_inside = all_inside && n.dot(v.cam) + d >= 0;
      if (!all_inside) polygon = clip_polygon(polygon, n, d);
      if (polygon.size() < 3) break;
    }
    if (polygon.size() < 3) continue;

    struct ScreenVertex {
      FixedPoint2 fixed;
      double inv_z;
      Vec3 bary_over_z;
    };
    std::vector<ScreenVertex> sv;
    sv.reserve(polygon.size());
    for (const auto& v : polygon) {
      const Vec2 pix(w / 2.0 + focal_ * v.cam.x() / v.cam.z(), h / 2.0 - focal_ * v.cam.y() / v.cam.z());
      sv.push_back({to_fixed(pix), 1.0 / v.cam.z(), v.bary / v.cam.z()});
    }

    const std::int32_t face_id = face_id_offset + static_cast<std::int32_t>(fi);
    for (std::size_t t = 1; t + 1 < sv.size(); ++t) {
      const ScreenVertex& a = sv[0];
      const ScreenVertex& b = sv[t];
      const ScreenVertex& c = sv[t + 1];
      fill_triangle(a.fixed, b.fixed, c.fixed, w, h, [&](int x, int y, double l0, double l1, double l2) {
        const double inv_z = l0 * a.inv_z + l1 * b.inv_z + l2 * c.inv_z;
        const float z = static_cast<float>(1.0 / inv_z);
        const std::size_t idx = fb_.index(x, y);
        if (!(z < fb_.depth[idx])) return;
        fb_.depth[idx] = z;
        fb_.face_id[idx] = face_id;
        fb_.semantic[idx] = semantic;
        auto px_rgb = fb_.rgb.pixel(x, y);
        if (textured) {
          const Vec3 bary = (l0 * a.bary_over_z + l1 * b.bary_over_z + l2 * c.bary_over_z) / inv_z;
          const FaceUVs& uv = shading.face_uvs[fi];
          const Vec2 st = bary[0] * uv[0] + bary[1] * uv[1] + bary[2] * uv[2];
          const RgbImage& tex = *shading.texture;
          sample_bilinear(tex, st.x() * tex.width, st.y() * tex.height, texel);
          for (int ch = 0; ch < 3; ++ch)
            px_rgb[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(texel[ch]), 0L, 255L));
        } else {
          for (int ch = 0; ch < 3; ++ch) px_rgb[ch] = base_color[ch];
        }
      });
    }
  }
}

FrameBuffer rasterize(const AssetMesh& mesh, const CameraView& view, const Shading& shading) {
  Rasterizer r(view);
  r.draw(mesh, Vec3::Zero(), shading);
  return r.take();
}

DepthImage normalize_depth(const FrameBuffer& fb) {
  DepthImage out;
  out.width = fb.width;
  out.height = fb.height;
  out.values.assign(fb.depth.size(), 1.0f);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (float d : fb.depth) {
    if (std::isfinite(d)) {
      lo = std::min<double>(lo, d);
      hi = std::max<double>(hi, d);
    }
  }
  if (!std::isfinite(lo)) return out;
  out.near_used = lo;
  out.far_used = hi;
  const double range = hi - lo;
  for (std::size_t i = 0; i < fb.depth.size(); ++i) {
    if (!std::isfinite(fb.depth[i])) continue;
    out.values[i] = range > 0 ? static_cast<float>(std::clamp((fb.depth[i] - lo) / range, 0.0, 1.0)) : 0.0f;
  }
  return out;
}

GrayImage depth_to_gray(const DepthImage& d) {
  GrayImage g(d.width, d.height, 1);
  for (std::size_t i = 0; i < d.values.size(); ++i)
    g.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::clamp(d.values[i], 0.0f, 1.0f))));
  return g;
}

}  // namespace urbanforge
