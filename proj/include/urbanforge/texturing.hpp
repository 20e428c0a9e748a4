#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "urbanforge/generator.hpp"
#include "urbanforge/mesh.hpp"
#include "urbanforge/texture.hpp"
#include "urbanforge/uv_atlas.hpp"

namespace urbanforge {

inline constexpr int kExportDilationRings = 4;

struct TexturingConfig {
  int n_views = kDefaultViews;
  int steps = kDefaultSteps;
  int atlas_resolution = kDefaultAtlasResolution;
  GeneratorEndpoint generator;
  std::optional<RgbImage> reference;
};

/// One asset after the full texture stage.
struct TexturedAsset {
  std::shared_ptr<const AssetMesh> mesh;
  std::shared_ptr<const UVAtlas> atlas;
  std::shared_ptr<const UVTexture> texture;
  /// Texture with gutters dilated; what rendering and export use.
  std::shared_ptr<const RgbImage> albedo;
  std::string prompt;
  std::uint64_t seed = 0;
  /// Valid-texel coverage after merging views, and of the final texture.
  double projected_coverage = 0.0;
  double coverage = 0.0;
  std::vector<std::string> warnings;
};

/// Unwraps (unless `atlas` is given), renders the camera rig, generates the view grid, crops,
/// back-projects, merges, inpaints and enhances. Remote generator failures fall back to the
/// procedural generator with a warning unless the endpoint is strict.
TexturedAsset texture_asset(std::shared_ptr<const AssetMesh> mesh, const std::string& prompt, std::uint64_t seed,
                            const TexturingConfig& cfg, std::shared_ptr<const UVAtlas> atlas = nullptr);

/// Per-asset seed derived from the run seed and the asset id.
std::uint64_t asset_seed(std::uint64_t run_seed, const std::string& asset_id);

}  // namespace urbanforge
