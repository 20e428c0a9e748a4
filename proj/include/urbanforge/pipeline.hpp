#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbanforge/assembly.hpp"
#include "urbanforge/config.hpp"
#include "urbanforge/design.hpp"
#include "urbanforge/metrics.hpp"
#include "urbanforge/nav.hpp"
#include "urbanforge/texturing.hpp"

namespace urbanforge {

/// Per-stage timings, cache hits, seeds and warnings of one invocation.
class RunLog {
 public:
  void stage(const std::string& name, double seconds, bool cached, const std::string& input_hash,
             nlohmann::json extra = nlohmann::json::object());
  void warn(const std::string& message) { warnings_.push_back(message); }
  void set(const std::string& key, nlohmann::json value) { fields_[key] = std::move(value); }
  const std::vector<std::string>& warnings() const { return warnings_; }
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  nlohmann::json stages_ = nlohmann::json::array();
  nlohmann::json fields_ = nlohmann::json::object();
  std::vector<std::string> warnings_;
};

struct StageResult {
  bool cached = false;
  std::string input_hash;
};

/// Stage artifacts under the work directory. A stage whose stamp matches the hash of its
/// inputs is skipped; stamps are written after the artifacts they cover.
StageResult stage_ingest(const RunConfig& cfg, RunLog& log);
StageResult stage_design(const RunConfig& cfg, RunLog& log);
StageResult stage_texture(const RunConfig& cfg, RunLog& log);
/// Reassembles, runs the refine loop and exports the bundle to cfg.output_dir.
StageResult stage_assemble(const RunConfig& cfg, RunLog& log);

using StageFn = StageResult (*)(const RunConfig&, RunLog&);
/// Runs one stage and records its wall time and cache status.
StageResult run_stage(const std::string& name, StageFn fn, const RunConfig& cfg, RunLog& log);

std::filesystem::path plan_path(const RunConfig& cfg);
std::filesystem::path brief_path(const RunConfig& cfg);
std::filesystem::path texture_dir(const RunConfig& cfg);

ScenePlan load_plan(const std::filesystem::path& path);
void save_plan(const ScenePlan& plan, const std::filesystem::path& path);
DesignBrief load_brief(const std::filesystem::path& path);
void save_brief(const DesignBrief& brief, const std::filesystem::path& path);
nlohmann::json atlas_to_json(const UVAtlas& atlas);
UVAtlas atlas_from_json(const nlohmann::json& doc);

GeoLayout ingest_layout(const RunConfig& cfg);
TexturingConfig texturing_config(const RunConfig& cfg);
DesignerConfig designer_config(const RunConfig& cfg);

struct PipelineResult {
  int exit_status = 0;
  std::optional<ExportBundle> bundle;
  std::string error;
  nlohmann::json log;
};

/// ingest -> design -> texture -> assemble/refine/export. Errors are caught, recorded in the
/// run log (always written to cfg.run_log) and mapped to an exit status.
PipelineResult run_pipeline(const RunConfig& cfg);

struct NavigateOptions {
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  double resolution = 1.0;
  double stride_m = 2.0;
  RrtParams rrt;
  Intrinsics intrinsics;
};

struct NavigateResult {
  NavPlan plan;
  std::size_t frames = 0;
};

/// Voxelizes the bundle, plans with RRT and writes the recorded trajectory to `out_dir`.
NavigateResult run_navigate(const std::filesystem::path& bundle_dir, const NavigateOptions& opts,
                            const std::filesystem::path& out_dir);

struct EvaluateOptions {
  std::optional<std::filesystem::path> generated_images;
  std::optional<std::filesystem::path> reference_images;
  std::optional<std::filesystem::path> generated_features;
  std::optional<std::filesystem::path> reference_features;
  std::optional<std::filesystem::path> pred_depth;
  std::optional<std::filesystem::path> truth_depth;
  std::optional<std::filesystem::path> bundle;
  DesignerConfig critic;
  int snapshot_views = 4;
};

/// Computes every metric whose inputs are given. Image directories hold PNGs, depth
/// directories hold 16-bit PNGs with 0 as background, matched by sorted file name.
std::vector<MetricReport> run_evaluate(const EvaluateOptions& opts, std::vector<std::string>* warnings = nullptr);

/// Scene renders from `n` rig views around the scene center.
std::vector<RgbImage> scene_snapshots(const SceneManifest& manifest, int n, int resolution);

std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& extension);

}  // namespace urbanforge
