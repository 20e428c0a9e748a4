#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "urbanforge/camera.hpp"
#include "urbanforge/design.hpp"
#include "urbanforge/raster.hpp"
#include "urbanforge/texturing.hpp"

namespace urbanforge {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kSnapshotResolution = 256;
inline constexpr int kDefaultMaxRefineIters = 1;

struct ManifestEntry {
  std::string id;
  AssetCategory category = AssetCategory::Buildings;
  std::shared_ptr<const AssetMesh> mesh;
  std::shared_ptr<const UVAtlas> atlas;
  std::shared_ptr<const UVTexture> texture;
  std::shared_ptr<const RgbImage> albedo;
  Vec3 translation = Vec3::Zero();
  /// World-frame bounds (local bounds translated).
  Box3 bounds;
  std::string prompt;
  std::uint64_t seed = 0;
  std::string texture_hash;
  int refine_round = 0;
  double coverage = 1.0;
};

struct SceneManifest {
  std::vector<ManifestEntry> entries;
  Box3 bounds;
  int refine_round = 0;
  std::string instruction;
  std::uint64_t seed = 0;

  const ManifestEntry* find(const std::string& id) const;
  ManifestEntry* find(const std::string& id);
};

std::string texture_hash(const RgbImage& img);
std::string mesh_hash(const AssetMesh& mesh);

/// Builds a manifest entry per plan asset (ground last) from the textured assets keyed by id.
/// Throws IncompleteScene naming every asset without a texture.
SceneManifest reassemble(const ScenePlan& plan, const std::map<std::string, TexturedAsset>& textures);

/// Replaces one entry's texture state in place.
void apply_texture(ManifestEntry& entry, const TexturedAsset& t);

/// Asset ids made safe for file names ('/' and other separators become '_').
std::string asset_file_stem(const std::string& id);

struct ExportBundle {
  std::filesystem::path root;
  std::vector<std::filesystem::path> files;
};

/// Writes assets/<stem>.{obj,mtl,png}, scene.obj, scene.mtl and manifest.json with vertices in
/// the world frame. Files are staged in a sibling directory and moved into place on success.
ExportBundle export_scene(const SceneManifest& manifest, const std::filesystem::path& out_dir);

/// Reads a bundle written by export_scene.
SceneManifest load_bundle(const std::filesystem::path& dir);

/// Renders every entry with world transforms applied; face ids are offset per entry in order.
FrameBuffer render_scene(const SceneManifest& manifest, const CameraView& view, bool textured = true);

/// Overview camera looking at the scene center from the rig elevation.
CameraView overview_camera(const SceneManifest& manifest, int resolution);

struct RefineConfig {
  int max_iters = kDefaultMaxRefineIters;
  DesignerConfig critic;
  TexturingConfig texturing;
  int workers = 1;
};

struct RefineOutcome {
  std::vector<CritiqueReport> reports;
  std::vector<std::string> warnings;
};

/// Critique-driven re-texturing: each round snapshots every asset, asks the critic, and
/// re-textures only the flagged assets with their new prompt and seed + round.
SceneManifest refine_loop(SceneManifest manifest, const DesignBrief& brief, const RefineConfig& cfg,
                          RefineOutcome* outcome = nullptr);

}  // namespace urbanforge
