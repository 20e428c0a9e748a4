#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "urbanforge/camera.hpp"
#include "urbanforge/image.hpp"
#include "urbanforge/mesh.hpp"

namespace urbanforge {

inline constexpr std::int32_t kNoFace = -1;

/// Z-buffered render target. depth holds view-space z (+inf for background).
struct FrameBuffer {
  int width = 0;
  int height = 0;
  RgbImage rgb;
  std::vector<float> depth;
  std::vector<std::uint8_t> semantic;
  std::vector<std::int32_t> face_id;

  FrameBuffer() = default;
  FrameBuffer(int w, int h)
      : width(w),
        height(h),
        rgb(w, h, 3),
        depth(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::infinity()),
        semantic(static_cast<std::size_t>(w) * h, kBackgroundSemantic),
        face_id(static_cast<std::size_t>(w) * h, kNoFace) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Min-max normalized depth: 0 at the nearest foreground texel, 1 at the farthest and background.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  double near_used = 0.0;
  double far_used = 0.0;
};

using FaceUVs = std::array<Vec2, 3>;

std::array<std::uint8_t, 3> category_color(AssetCategory c);

struct Shading {
  enum class Kind { CategoryColor, Flat, Textured };
  Kind kind = Kind::CategoryColor;
  std::array<std::uint8_t, 3> color{200, 200, 200};
  /// Textured: per-face corner UVs in [0,1]^2 and the albedo texture they index.
  std::span<const FaceUVs> face_uvs;
  const RgbImage* texture = nullptr;

  static Shading category() { return {}; }
  static Shading flat(std::array<std::uint8_t, 3> c) {
    Shading s;
    s.kind = Kind::Flat;
    s.color = c;
    return s;
  }
  static Shading textured(std::span<const FaceUVs> uvs, const RgbImage& tex) {
    Shading s;
    s.kind = Kind::Textured;
    s.face_uvs = uvs;
    s.texture = &tex;
    return s;
  }
};

/// Perspective rasterizer with near/guard-band clipping, 8-bit subpixel fixed-point edge
/// functions and a top-left fill rule. Depth test is strict less, so on exact ties the
/// face drawn first (lower index) wins. Back faces are not culled.
class Rasterizer {
 public:
  explicit Rasterizer(const CameraView& view);

  /// Draws `mesh` translated by `translation`; face ids are offset by `face_id_offset`.
  void draw(const AssetMesh& mesh, const Vec3& translation, const Shading& shading,
            std::int32_t face_id_offset = 0);

  const FrameBuffer& frame() const { return fb_; }
  FrameBuffer take() { return std::move(fb_); }

 private:
  CameraView view_;
  Vec3 right_, up_, forward_;
  double focal_;
  FrameBuffer fb_;
};

FrameBuffer rasterize(const AssetMesh& mesh, const CameraView& view, const Shading& shading = Shading::category());

DepthImage normalize_depth(const FrameBuffer& fb);

/// 8-bit encoding for generator conditioning: 255 * (1 - value), so near is bright and background black.
GrayImage depth_to_gray(const DepthImage& d);

}  // namespace urbanforge
