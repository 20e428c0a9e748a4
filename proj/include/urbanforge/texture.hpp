#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "urbanforge/camera.hpp"
#include "urbanforge/image.hpp"
#include "urbanforge/raster.hpp"
#include "urbanforge/uv_atlas.hpp"

namespace urbanforge {

inline constexpr double kOcclusionEpsFar = 1e-3;
inline constexpr double kMinFacingCos = 0.2;
inline constexpr int kInpaintNeighbors = 4;
inline constexpr double kInpaintPower = 2.0;

struct UVTexture {
  RgbImage rgb;
  /// 1 where the texel holds projected (or filled) color.
  std::vector<std::uint8_t> coverage;

  UVTexture() = default;
  UVTexture(int w, int h) : rgb(w, h, 3), coverage(static_cast<std::size_t>(w) * h, 0) {}
  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
  std::size_t covered_count() const;
  bool operator==(const UVTexture&) const = default;
};

struct ViewMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;
  /// View-alignment cosine, zero where the mask is unset.
  std::vector<float> quality;

  ViewMask() = default;
  ViewMask(int w, int h)
      : width(w), height(h), mask(static_cast<std::size_t>(w) * h, 0), quality(static_cast<std::size_t>(w) * h, 0.0f) {}
};

struct UVPositionMap {
  int width = 0;
  int height = 0;
  /// Asset-local positions normalized so the mesh bounding box spans [0,1]^3.
  std::vector<Vec3f> positions;
  std::vector<std::uint8_t> valid;

  std::size_t valid_count() const;
};

struct BackprojectResult {
  UVTexture texture;
  ViewMask mask;
};

/// Maps a view image back onto the atlas. A texel is accepted when its surface point
/// projects inside the frame, faces the camera with cosine >= kMinFacingCos, and every
/// bilinear tap pixel sees the texel's face plane within kOcclusionEpsFar * far of
/// depth_ref. Accepted texels sample the patch bilinearly; quality is the cosine.
BackprojectResult backproject(const CameraView& view, const RgbImage& patch, const AssetMesh& mesh,
                              const TexelMap& texels, const FrameBuffer& depth_ref);
BackprojectResult backproject(const CameraView& view, const RgbImage& patch, const AssetMesh& mesh,
                              const UVAtlas& atlas, const FrameBuffer& depth_ref);

/// Owning view per texel (-1 where no mask is set): highest quality, ties to the lowest index.
std::vector<std::int32_t> assign_views(std::span<const ViewMask> masks);
/// The masks reduced to a disjoint partition of their union.
std::vector<ViewMask> disjoint_masks(std::span<const ViewMask> masks);
/// Masked sum over the disjoint partition; coverage is the union of the masks.
UVTexture merge_views(std::span<const UVTexture> textures, std::span<const ViewMask> masks);

UVPositionMap build_position_map(const AssetMesh& mesh, const TexelMap& texels);
UVPositionMap build_position_map(const AssetMesh& mesh, const UVAtlas& atlas, int width, int height);

/// Fills valid-but-uncovered texels with the inverse-distance-weighted (power 2) mean of the
/// K=4 nearest covered texels in position space. Output coverage equals pos.valid.
UVTexture inpaint_uv(const UVTexture& tex, const UVPositionMap& pos);

/// Copy of the texture's rgb where uncovered texels adjacent to covered ones take the mean of
/// their covered neighbors, repeated `rings` times; hides island borders under bilinear filtering.
RgbImage dilate_gutter(const UVTexture& tex, int rings);

/// Fraction of atlas-valid texels covered by `tex`.
double valid_coverage(const UVTexture& tex, const TexelMap& texels);

}  // namespace urbanforge
