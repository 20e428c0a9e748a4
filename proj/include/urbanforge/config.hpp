#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "urbanforge/http_client.hpp"
#include "urbanforge/layout.hpp"

namespace urbanforge {

struct RasterInput {
  std::filesystem::path semantic;
  std::filesystem::path heights;
  /// Meters per height-map level.
  double height_scale = 1.0;
  double cell_size_m = 1.0;
  ClassMap class_map;
};

struct RunConfig {
  std::optional<std::filesystem::path> osm;
  std::optional<RasterInput> raster;
  std::string instruction;
  std::optional<std::filesystem::path> reference;

  EndpointConfig generator;
  EndpointConfig inpaint;
  EndpointConfig upscaler;
  EndpointConfig designer;
  std::string designer_model = "urban-mllm";
  bool strict = false;

  int n_views = 4;
  int steps = 30;
  int atlas_resolution = 1024;
  int max_refine_iters = 1;
  int workers = 1;
  std::uint64_t seed = 0;
  bool seed_generated = false;
  /// Asset ids the mock critic always flags.
  std::set<std::string> force_refine;

  std::filesystem::path output_dir;
  /// Stage cache; defaults to "<output_dir>.work".
  std::filesystem::path work_dir;
  /// Run log; defaults to "<output_dir>.log.json".
  std::filesystem::path run_log;
};

/// Builds a config from a JSON document. Relative paths resolve against `base_dir`.
/// Throws Config naming the offending key for unknown keys and invalid values.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads and parses a JSON config file, then applies environment overrides. Throws Io when
/// the file is missing.
RunConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;

/// URBANFORGE_{GENERATOR,INPAINT,UPSCALER,DESIGNER}_URL replace the matching endpoint URLs.
void apply_env_overrides(RunConfig& cfg, const EnvLookup& getenv);
void apply_env_overrides(RunConfig& cfg);

/// Canonical JSON form; parse_config(config_to_json(c), "/") reproduces `c`.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace urbanforge
