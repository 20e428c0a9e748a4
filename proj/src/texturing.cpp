#include "urbanforge/texturing.hpp"

#include "urbanforge/camera.hpp"
#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/raster.hpp"

namespace urbanforge {

std::uint64_t asset_seed(std::uint64_t run_seed, const std::string& asset_id) {
  return mix64(run_seed ^ fnv1a(asset_id)) >> 1;
}

TexturedAsset texture_asset(std::shared_ptr<const AssetMesh> mesh, const std::string& prompt, std::uint64_t seed,
                            const TexturingConfig& cfg, std::shared_ptr<const UVAtlas> atlas) {
  TexturedAsset out;
  out.mesh = mesh;
  out.prompt = prompt;
  out.seed = seed;
  if (!atlas) {
    try {
      atlas = std::make_shared<UVAtlas>(unwrap_uv(*mesh, cfg.atlas_resolution, cfg.atlas_resolution));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AtlasOverflow) throw;
      out.warnings.push_back(mesh->id + ": atlas overflow, retrying at twice the resolution");
      atlas = std::make_shared<UVAtlas>(unwrap_uv(*mesh, 2 * cfg.atlas_resolution, 2 * cfg.atlas_resolution));
    }
  }
  out.atlas = atlas;
  const TexelMap texels = build_texel_map(*atlas);

  const auto rig = make_camera_rig(*mesh, cfg.n_views);
  std::vector<FrameBuffer> frames;
  std::vector<GrayImage> depth_tiles;
  frames.reserve(rig.size());
  for (const auto& view : rig) {
    frames.push_back(rasterize(*mesh, view));
    depth_tiles.push_back(depth_to_gray(normalize_depth(frames.back())));
  }

  GenerationRequest req;
  req.prompt = prompt;
  req.reference = cfg.reference;
  req.seed = seed;
  req.steps = cfg.steps;
  req.tile_size = rig.front().width;
  req.n_views = cfg.n_views;
  req.category = mesh->category;
  req.depth_grid = tile_images<std::uint8_t>(depth_tiles, grid_shape(cfg.n_views));

  RgbImage grid;
  try {
    grid = generate_views(req, cfg.generator);
  } catch (const Error& e) {
    const bool remote_failure = e.code() == ErrorCode::GeneratorUnavailable || e.code() == ErrorCode::MalformedResponse;
    if (cfg.generator.strict || !remote_failure) throw;
    out.warnings.push_back(mesh->id + ": remote generation failed, using the procedural generator: " + e.what());
    grid = generate_procedural(req);
  }
  const auto patches = crop_patches(grid, cfg.n_views);

  std::vector<UVTexture> textures;
  std::vector<ViewMask> masks;
  for (std::size_t k = 0; k < rig.size(); ++k) {
    auto bp = backproject(rig[k], patches[k], *mesh, texels, frames[k]);
    textures.push_back(std::move(bp.texture));
    masks.push_back(std::move(bp.mask));
  }
  UVTexture merged = merge_views(textures, masks);
  out.projected_coverage = valid_coverage(merged, texels);

  const UVPositionMap pos = build_position_map(*mesh, texels);
  UVTexture final_tex = inpaint_remote(merged, pos, prompt, cfg.generator, &out.warnings);
  final_tex = enhance_texture(final_tex, cfg.generator, &out.warnings);
  out.coverage = final_tex.width() == atlas->width
                     ? valid_coverage(final_tex, texels)
                     : valid_coverage(final_tex, build_texel_map(atlas->face_uvs, final_tex.width(), final_tex.height()));
  out.albedo = std::make_shared<RgbImage>(dilate_gutter(final_tex, kExportDilationRings));
  out.texture = std::make_shared<UVTexture>(std::move(final_tex));
  return out;
}

}  // namespace urbanforge
