#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urbanforge/core.hpp"
#include "urbanforge/http_client.hpp"
#include "urbanforge/image.hpp"
#include "urbanforge/texture.hpp"

namespace urbanforge {

inline constexpr int kDefaultSteps = 30;
inline constexpr int kDefaultTileSize = 512;
inline constexpr double kInpaintPreserveTolerance = 8.0 / 255.0;

/// Row-major tiling of n views: cols = ceil(sqrt(n)), rows = ceil(n / cols).
struct GridShape {
  int cols = 1;
  int rows = 1;
};
GridShape grid_shape(int n);

/// Tiles equally sized images row-major; unused cells stay zero.
template <typename T>
Image<T> tile_images(std::span<const Image<T>> tiles, GridShape shape) {
  if (tiles.empty()) return {};
  const int tw = tiles[0].width;
  const int th = tiles[0].height;
  Image<T> grid(tw * shape.cols, th * shape.rows, tiles[0].channels);
  for (std::size_t k = 0; k < tiles.size(); ++k)
    blit(grid, tiles[k], static_cast<int>(k % shape.cols) * tw, static_cast<int>(k / shape.cols) * th);
  return grid;
}

/// Splits a row-major grid into its first n square cells. Throws Shape for indivisible
/// dimensions or non-square cells.
std::vector<RgbImage> crop_patches(const RgbImage& grid, int n);

struct GenerationRequest {
  std::string prompt;
  std::optional<RgbImage> reference;
  /// Tiled 8-bit depth conditioning (near bright, background black).
  GrayImage depth_grid;
  std::uint64_t seed = 0;
  int steps = kDefaultSteps;
  int tile_size = kDefaultTileSize;
  int n_views = 4;
  AssetCategory category = AssetCategory::Buildings;

  /// Throws Config unless a prompt or reference is present, steps >= 1 and the depth grid
  /// matches the tiling of n_views tiles of tile_size.
  void validate() const;
};

enum class GeneratorMode { Procedural, Remote };

struct GeneratorEndpoint {
  GeneratorMode mode = GeneratorMode::Procedural;
  EndpointConfig generate;
  EndpointConfig inpaint;
  EndpointConfig upscale;
  /// Remote failures abort instead of falling back to local computation.
  bool strict = false;
};

/// Deterministic procedural view grid: category palette keyed by prompt keywords, value
/// noise from the seed, luminance scaled by depth so nearer surfaces are lighter.
RgbImage generate_procedural(const GenerationRequest& req);

/// Remote or procedural generation. Remote failures throw GeneratorUnavailable or
/// MalformedResponse; fallback policy is the caller's.
RgbImage generate_views(const GenerationRequest& req, const GeneratorEndpoint& ep);

/// Remote position-guided inpainting with a covered-texel preservation guard; falls back to
/// inpaint_uv (with a warning) when unconfigured, unreachable or non-conforming, unless strict.
UVTexture inpaint_remote(const UVTexture& tex, const UVPositionMap& pos, const std::string& prompt,
                         const GeneratorEndpoint& ep, std::vector<std::string>* warnings = nullptr);

/// Remote 2x tile upscaling; identity without an upscale endpoint. Coverage is upscaled by
/// nearest neighbor.
UVTexture enhance_texture(const UVTexture& tex, const GeneratorEndpoint& ep, std::vector<std::string>* warnings = nullptr);

/// Wire encodings shared with the protocol document.
Image<std::uint16_t> encode_positions16(const UVPositionMap& pos);
GrayImage coverage_image(const std::vector<std::uint8_t>& coverage, int width, int height);

/// Mean absolute difference over covered texels, in [0,1].
double covered_mae(const UVTexture& reference, const RgbImage& candidate);

}  // namespace urbanforge
