#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbanforge/core.hpp"
#include "urbanforge/http_client.hpp"
#include "urbanforge/image.hpp"
#include "urbanforge/mesh.hpp"

namespace urbanforge {

inline constexpr std::string_view kDesignHeader = "### ASSET DESCRIPTIONS";
inline constexpr std::string_view kCritiqueHeader = "### CRITIQUE";
inline constexpr std::string_view kScoreHeader = "### SCORES";
inline constexpr std::string_view kRefineSuffix = " highly detailed facade";
inline constexpr double kMockCoverageThreshold = 0.95;
inline constexpr double kMockScore = 7.0;

struct ScenePrompt {
  std::string instruction;
  std::optional<RgbImage> reference;
};

struct AssetRef {
  std::string id;
  AssetCategory category = AssetCategory::Buildings;
};

std::vector<AssetRef> asset_refs(const ScenePlan& plan);

struct DesignBrief {
  std::map<std::string, std::string> descriptions;
  std::string palette_notes;

  bool operator==(const DesignBrief&) const = default;
};

struct AssetVerdict {
  bool refine = false;
  std::string new_prompt;

  bool operator==(const AssetVerdict&) const = default;
};

struct CritiqueReport {
  std::map<std::string, AssetVerdict> verdicts;
  std::string summary;

  std::vector<std::string> flagged() const;
  bool operator==(const CritiqueReport&) const = default;
};

struct DesignerConfig {
  EndpointConfig endpoint;
  std::string model = "urban-mllm";
  double temperature = 0.2;
  /// Use the deterministic local designer/critic instead of the endpoint.
  bool mock = true;
  double mock_coverage_threshold = kMockCoverageThreshold;
  double mock_score = kMockScore;
  /// Asset ids the mock critic always flags (test hook).
  std::set<std::string> mock_force_refine;
};

/// Fills the scene-design template: role preamble, the instruction verbatim, assets grouped
/// by category and the response-format stanza. Throws EmptyScene for no assets.
std::string render_design_prompt(std::string_view instruction, std::span<const AssetRef> assets);

/// Parses the "id: description" protocol; MalformedDesign names the first missing id.
DesignBrief parse_design_response(std::string_view text, std::span<const AssetRef> assets);

DesignBrief design_scene(const ScenePrompt& prompt, std::span<const AssetRef> assets, const DesignerConfig& cfg);
DesignBrief design_scene(const ScenePrompt& prompt, const ScenePlan& plan, const DesignerConfig& cfg);

/// Deterministic description used for the ground plane, which is not part of the brief.
std::string ground_description(std::string_view instruction);

struct Snapshot {
  std::string asset_id;
  RgbImage image;
  /// Valid-texel coverage of the asset's final texture.
  double coverage = 1.0;
};

std::string render_critique_prompt(std::span<const Snapshot> snapshots, const DesignBrief& brief, bool with_overview);
CritiqueReport parse_critique_response(std::string_view text, std::span<const Snapshot> snapshots);
/// The optional scene overview is attached after the per-asset snapshots in remote mode.
CritiqueReport critique_scene(std::span<const Snapshot> snapshots, const DesignBrief& brief, const DesignerConfig& cfg,
                              const RgbImage* overview = nullptr);

/// Raw 1-10 critic scores for texture sophistication and geometric completeness, one per image.
std::vector<double> score_snapshots(std::span<const RgbImage> images, const DesignerConfig& cfg);

}  // namespace urbanforge
