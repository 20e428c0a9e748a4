#include "urbanforge/texture.hpp"

#include <algorithm>
#include <cmath>

#include "urbanforge/error.hpp"
#include "urbanforge/kdtree.hpp"

namespace urbanforge {

std::size_t UVTexture::covered_count() const {
  return static_cast<std::size_t>(std::count(coverage.begin(), coverage.end(), std::uint8_t{1}));
}

std::size_t UVPositionMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

BackprojectResult backproject(const CameraView& view, const RgbImage& patch, const AssetMesh& mesh,
                              const TexelMap& texels, const FrameBuffer& depth_ref) {
  view.validate();
  if (patch.width != view.width || patch.height != view.height || patch.channels != 3)
    throw Error(ErrorCode::Shape, "patch dimensions do not match the camera view");
  if (depth_ref.width != view.width || depth_ref.height != view.height)
    throw Error(ErrorCode::Shape, "reference depth dimensions do not match the camera view");

  const int w = texels.width;
  const int h = texels.height;
  BackprojectResult out{UVTexture(w, h), ViewMask(w, h)};
  const double eps = kOcclusionEpsFar * view.far;

  std::vector<Vec3> normals(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3& a = mesh.vertices[mesh.faces[f][0]];
    const Vec3 cr = (mesh.vertices[mesh.faces[f][1]] - a).cross(mesh.vertices[mesh.faces[f][2]] - a);
    normals[f] = cr.norm() > 0 ? Vec3(cr.normalized()) : Vec3::Zero();
  }

  const Vec3 fw = view.forward();
  const Vec3 rt = view.right();
  const Vec3 up = rt.cross(fw);
  const double focal = view.focal_px();
  auto ray = [&](double px, double py) {
    return Vec3(fw + (px - view.width / 2.0) / focal * rt + (view.height / 2.0 - py) / focal * up);
  };

  std::array<double, 3> color{};
  for (std::size_t i = 0; i < texels.face.size(); ++i) {
    if (!texels.valid(i)) continue;
    const int f = texels.face[i];
    const Vec3 p = texel_surface_point(mesh, texels, i);
    const Vec3& n = normals[f];
    const double cosine = n.dot((view.eye - p).normalized());
    if (!(cosine >= kMinFacingCos)) continue;
    const Vec3 d = p - view.eye;
    const double depth = d.dot(fw);
    if (!(depth > view.near && depth < view.far)) continue;
    const double px = view.width / 2.0 + focal * d.dot(rt) / depth;
    const double py = view.height / 2.0 - focal * d.dot(up) / depth;
    if (!(px >= 0 && py >= 0 && px < view.width && py < view.height)) continue;

    // Bilinear taps; each must see this face's plane in the reference depth.
    const int x0 = std::clamp(static_cast<int>(std::floor(px - 0.5)), 0, view.width - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor(py - 0.5)), 0, view.height - 1);
    const int x1 = std::min(x0 + 1, view.width - 1);
    const int y1 = std::min(y0 + 1, view.height - 1);
    const double plane = n.dot(p - view.eye);
    bool visible = true;
    for (int ty : {y0, y1}) {
      for (int tx : {x0, x1}) {
        const Vec3 dir = ray(tx + 0.5, ty + 0.5);
        const double denom = n.dot(dir);
        const float ref = depth_ref.depth[depth_ref.index(tx, ty)];
        visible = visible && denom < 0 && std::isfinite(ref) && std::abs(ref - plane / denom) <= eps;
      }
    }
    if (!visible) continue;

    sample_bilinear(patch, px, py, color);
    for (int c = 0; c < 3; ++c)
      out.texture.rgb.data[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(color[c]), 0L, 255L));
    out.texture.coverage[i] = 1;
    out.mask.mask[i] = 1;
    out.mask.quality[i] = static_cast<float>(cosine);
  }
  return out;
}

BackprojectResult backproject(const CameraView& view, const RgbImage& patch, const AssetMesh& mesh,
                              const UVAtlas& atlas, const FrameBuffer& depth_ref) {
  return backproject(view, patch, mesh, build_texel_map(atlas), depth_ref);
}

std::vector<std::int32_t> assign_views(std::span<const ViewMask> masks) {
  if (masks.empty()) throw Error(ErrorCode::EmptyInput, "no view masks to merge");
  const std::size_t count = masks[0].mask.size();
  for (const auto& m : masks) {
    if (m.width != masks[0].width || m.height != masks[0].height || m.mask.size() != count)
      throw Error(ErrorCode::Shape, "view masks differ in size");
  }
  std::vector<std::int32_t> owner(count, -1);
  for (std::size_t i = 0; i < count; ++i) {
    float best = 0.0f;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      if (!masks[k].mask[i]) continue;
      if (owner[i] < 0 || masks[k].quality[i] > best) {
        owner[i] = static_cast<std::int32_t>(k);
        best = masks[k].quality[i];
      }
    }
  }
  return owner;
}

std::vector<ViewMask> disjoint_masks(std::span<const ViewMask> masks) {
  const auto owner = assign_views(masks);
  std::vector<ViewMask> out;
  out.reserve(masks.size());
  for (std::size_t k = 0; k < masks.size(); ++k) {
    ViewMask m(masks[k].width, masks[k].height);
    for (std::size_t i = 0; i < owner.size(); ++i) {
      if (owner[i] == static_cast<std::int32_t>(k)) {
        m.mask[i] = 1;
        m.quality[i] = masks[k].quality[i];
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

UVTexture merge_views(std::span<const UVTexture> textures, std::span<const ViewMask> masks) {
  if (textures.empty() || masks.empty()) throw Error(ErrorCode::EmptyInput, "no view textures to merge");
  if (textures.size() != masks.size()) throw Error(ErrorCode::Shape, "texture and mask counts differ");
  for (const auto& t : textures) {
    if (t.width() != masks[0].width || t.height() != masks[0].height)
      throw Error(ErrorCode::Shape, "view textures differ in size");
  }
  const auto parts = disjoint_masks(masks);
  UVTexture out(masks[0].width, masks[0].height);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t i = 0; i < out.coverage.size(); ++i) {
      if (!parts[k].mask[i]) continue;
      for (int c = 0; c < 3; ++c) out.rgb.data[i * 3 + c] += textures[k].rgb.data[i * 3 + c];
      out.coverage[i] = 1;
    }
  }
  return out;
}

UVPositionMap build_position_map(const AssetMesh& mesh, const TexelMap& texels) {
  UVPositionMap pos;
  pos.width = texels.width;
  pos.height = texels.height;
  pos.positions.assign(texels.face.size(), Vec3f::Zero());
  pos.valid.assign(texels.face.size(), 0);
  if (mesh.vertices.empty()) return pos;
  const Box3 box = bounding_box(mesh.vertices);
  const Vec3 ext = box.extent();
  for (std::size_t i = 0; i < texels.face.size(); ++i) {
    if (!texels.valid(i)) continue;
    const Vec3 p = texel_surface_point(mesh, texels, i);
    Vec3 q;
    for (int a = 0; a < 3; ++a) q[a] = ext[a] > 0 ? std::clamp((p[a] - box.min[a]) / ext[a], 0.0, 1.0) : 0.0;
    pos.positions[i] = q.cast<float>();
    pos.valid[i] = 1;
  }
  return pos;
}

UVPositionMap build_position_map(const AssetMesh& mesh, const UVAtlas& atlas, int width, int height) {
  return build_position_map(mesh, build_texel_map(atlas.face_uvs, width, height));
}

UVTexture inpaint_uv(const UVTexture& tex, const UVPositionMap& pos) {
  if (tex.width() != pos.width || tex.height() != pos.height)
    throw Error(ErrorCode::Shape, "texture and position map differ in size");
  std::vector<Vec3f> sources;
  std::vector<std::size_t> source_texel;
  for (std::size_t i = 0; i < tex.coverage.size(); ++i) {
    if (tex.coverage[i] && pos.valid[i]) {
      sources.push_back(pos.positions[i]);
      source_texel.push_back(i);
    }
  }
  if (sources.empty()) throw Error(ErrorCode::NoSourceTexels, "no covered texels to inpaint from");

  UVTexture out = tex;
  out.coverage = pos.valid;
  const KdTree<float, 3> tree(std::move(sources));
  for (std::size_t i = 0; i < tex.coverage.size(); ++i) {
    if (!pos.valid[i] || tex.coverage[i]) continue;
    const auto nn = tree.knn(pos.positions[i], kInpaintNeighbors);
    std::array<double, 3> acc{};
    double wsum = 0;
    const bool exact = nn.front().dist2 == 0;
    for (const auto& nb : nn) {
      if (exact && nb.dist2 != 0) continue;
      const double wgt = exact ? 1.0 : 1.0 / std::pow(nb.dist2, kInpaintPower / 2);
      const std::size_t s = source_texel[nb.index];
      for (int c = 0; c < 3; ++c) acc[c] += wgt * tex.rgb.data[s * 3 + c];
      wsum += wgt;
    }
    for (int c = 0; c < 3; ++c)
      out.rgb.data[i * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[c] / wsum), 0L, 255L));
  }
  return out;
}

RgbImage dilate_gutter(const UVTexture& tex, int rings) {
  RgbImage img = tex.rgb;
  std::vector<std::uint8_t> filled = tex.coverage;
  const int w = tex.width();
  const int h = tex.height();
  for (int r = 0; r < rings; ++r) {
    std::vector<std::uint8_t> next = filled;
    RgbImage next_img = img;
    bool changed = false;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (filled[i]) continue;
        std::array<int, 3> acc{};
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
            if (!filled[j]) continue;
            for (int c = 0; c < 3; ++c) acc[c] += img.data[j * 3 + c];
            ++count;
          }
        }
        if (count == 0) continue;
        for (int c = 0; c < 3; ++c) next_img.data[i * 3 + c] = static_cast<std::uint8_t>((acc[c] + count / 2) / count);
        next[i] = 1;
        changed = true;
      }
    }
    img = std::move(next_img);
    filled = std::move(next);
    if (!changed) break;
  }
  return img;
}

double valid_coverage(const UVTexture& tex, const TexelMap& texels) {
  std::size_t valid = 0, covered = 0;
  for (std::size_t i = 0; i < texels.face.size(); ++i) {
    if (!texels.valid(i)) continue;
    ++valid;
    covered += tex.coverage[i] ? 1 : 0;
  }
  return valid == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(valid);
}

}  // namespace urbanforge
