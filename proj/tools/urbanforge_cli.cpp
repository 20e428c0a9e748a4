#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "urbanforge/error.hpp"
#include "urbanforge/image_io.hpp"
#include "urbanforge/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace urbanforge;

namespace {

/// Flags that mirror RunConfig keys; set values overlay the config file.
struct RunFlags {
  std::string config;
  std::string osm, instruction, reference, output_dir, work_dir, run_log;
  std::string generator_url, inpaint_url, upscaler_url, designer_url, designer_model;
  std::optional<int> n_views, steps, atlas_resolution, max_refine_iters, workers;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::vector<std::string> force_refine;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON run config");
    app->add_option("--osm", osm, "OSM XML layout");
    app->add_option("--instruction", instruction, "Scene instruction text");
    app->add_option("--reference", reference, "Reference image (PNG)");
    app->add_option("-o,--output-dir", output_dir, "Export bundle directory");
    app->add_option("--work-dir", work_dir, "Stage cache directory");
    app->add_option("--run-log", run_log, "Run log path");
    app->add_option("--generator-url", generator_url, "Image generator endpoint");
    app->add_option("--inpaint-url", inpaint_url, "Texture inpainting endpoint");
    app->add_option("--upscaler-url", upscaler_url, "Texture upscaler endpoint");
    app->add_option("--designer-url", designer_url, "Designer/critic chat endpoint");
    app->add_option("--designer-model", designer_model, "Designer/critic model name");
    app->add_option("--n-views", n_views, "Camera views per asset");
    app->add_option("--steps", steps, "Generator sampling steps");
    app->add_option("--atlas-resolution", atlas_resolution, "UV atlas size in texels");
    app->add_option("--max-refine-iters", max_refine_iters, "Refinement rounds");
    app->add_option("--workers", workers, "Parallel texture workers");
    app->add_option("--seed", seed, "Run seed");
    app->add_flag("--strict", strict, "Fail instead of falling back when an endpoint fails");
    app->add_option("--force-refine", force_refine, "Asset ids the mock critic always flags");
  }

  RunConfig load() const {
    json doc = json::object();
    fs::path base = fs::current_path();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw Error(ErrorCode::Io, "cannot open config " + config);
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, config + ": " + e.what());
      }
      base = fs::absolute(config).parent_path();
    }
    auto abs = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
    if (!osm.empty()) doc["osm"] = abs(osm);
    if (!instruction.empty()) doc["instruction"] = instruction;
    if (!reference.empty()) doc["reference"] = abs(reference);
    if (!output_dir.empty()) doc["output_dir"] = abs(output_dir);
    if (!work_dir.empty()) doc["work_dir"] = abs(work_dir);
    if (!run_log.empty()) doc["run_log"] = abs(run_log);
    if (doc.is_object()) {
      auto& ep = doc["endpoints"];
      if (ep.is_null()) ep = json::object();
      if (!generator_url.empty()) ep["generator"] = generator_url;
      if (!inpaint_url.empty()) ep["inpaint"] = inpaint_url;
      if (!upscaler_url.empty()) ep["upscaler"] = upscaler_url;
      if (!designer_url.empty()) ep["designer"] = designer_url;
      if (!designer_model.empty()) ep["designer_model"] = designer_model;
      if (strict) ep["strict"] = true;
    }
    if (n_views) doc["n_views"] = *n_views;
    if (steps) doc["steps"] = *steps;
    if (atlas_resolution) doc["atlas_resolution"] = *atlas_resolution;
    if (max_refine_iters) doc["max_refine_iters"] = *max_refine_iters;
    if (workers) doc["workers"] = *workers;
    if (seed) doc["seed"] = *seed;
    if (!force_refine.empty()) doc["force_refine"] = force_refine;
    RunConfig cfg = parse_config(doc, base);
    apply_env_overrides(cfg);
    return cfg;
  }
};

void print_stages(const RunLog& log) {
  for (const auto& s : log.to_json().at("stages")) {
    std::cout << s.at("stage").get<std::string>() << ": " << (s.at("cached").get<bool>() ? "cached" : "done") << " in "
              << s.at("seconds").get<double>() << " s\n";
  }
  for (const auto& w : log.warnings()) std::cerr << "warning: " << w << "\n";
}

int run_single_stage(const RunFlags& flags, const char* name, StageFn fn) {
  const RunConfig cfg = flags.load();
  RunLog log;
  log.set("seed", cfg.seed);
  run_stage(name, fn, cfg, log);
  print_stages(log);
  return 0;
}

Vec3 to_vec(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"urbanforge: layout-conditioned textured city scene generation"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* ingest = app.add_subcommand("ingest", "Parse the layout and build asset meshes");
  auto* design = app.add_subcommand("design", "Write per-asset design descriptions");
  auto* texture = app.add_subcommand("texture", "Texture every asset");
  auto* assemble = app.add_subcommand("assemble", "Reassemble, refine and export the scene bundle");
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage");
  for (auto* sub : {ingest, design, texture, assemble, pipeline}) flags.attach(sub);

  auto* navigate = app.add_subcommand("navigate", "Plan an RRT path through a bundle and record observations");
  std::string nav_bundle, nav_out;
  std::vector<double> nav_start, nav_goal;
  NavigateOptions nav;
  navigate->add_option("--bundle", nav_bundle, "Export bundle directory")->required();
  navigate->add_option("--start", nav_start, "Start position x y z")->expected(3)->required();
  navigate->add_option("--goal", nav_goal, "Goal position x y z")->expected(3)->required();
  navigate->add_option("--resolution", nav.resolution, "Voxel size in meters");
  navigate->add_option("--stride", nav.stride_m, "Distance between recorded poses");
  navigate->add_option("--seed", nav.rrt.seed, "RRT seed");
  navigate->add_option("--max-iters", nav.rrt.max_iters, "RRT iteration budget");
  navigate->add_option("--step", nav.rrt.step_m, "RRT step length (0 = 2 x resolution)");
  navigate->add_option("--goal-bias", nav.rrt.goal_bias, "Probability of sampling the goal");
  navigate->add_option("--width", nav.intrinsics.width, "Observation width");
  navigate->add_option("--height", nav.intrinsics.height, "Observation height");
  navigate->add_option("--fov", nav.intrinsics.fov_y_deg, "Vertical field of view in degrees");
  navigate->add_option("-o,--out", nav_out, "Trajectory output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Compute FID, KID, HI, DE and PS");
  EvaluateOptions ev;
  std::string ev_out, ev_designer;
  auto path_opt = [&](const char* name, std::optional<fs::path>& slot, const char* help) {
    evaluate->add_option_function<std::string>(name, [&slot](const std::string& s) { slot = fs::path(s); }, help);
  };
  path_opt("--generated-images", ev.generated_images, "Directory of generated PNGs");
  path_opt("--reference-images", ev.reference_images, "Directory of reference PNGs");
  path_opt("--generated-features", ev.generated_features, "Feature file for generated images");
  path_opt("--reference-features", ev.reference_features, "Feature file for reference images");
  path_opt("--pred-depth", ev.pred_depth, "Directory of predicted 16-bit depth PNGs");
  path_opt("--truth-depth", ev.truth_depth, "Directory of reference 16-bit depth PNGs");
  path_opt("--bundle", ev.bundle, "Export bundle for the preference score");
  evaluate->add_option("--designer-url", ev_designer, "Critic endpoint (mock critic when unset)");
  evaluate->add_option("--snapshots", ev.snapshot_views, "Scene snapshots for the preference score");
  evaluate->add_option("-o,--out", ev_out, "Write the metric report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_status_for(ErrorCode::Config);
  }

  try {
    if (ingest->parsed()) return run_single_stage(flags, "ingest", stage_ingest);
    if (design->parsed()) return run_single_stage(flags, "design", stage_design);
    if (texture->parsed()) return run_single_stage(flags, "texture", stage_texture);
    if (assemble->parsed()) return run_single_stage(flags, "assemble", stage_assemble);
    if (pipeline->parsed()) {
      const RunConfig cfg = flags.load();
      const PipelineResult r = run_pipeline(cfg);
      for (const auto& s : r.log.at("stages")) {
        std::cout << s.at("stage").get<std::string>() << ": " << (s.at("cached").get<bool>() ? "cached" : "done")
                  << " in " << s.at("seconds").get<double>() << " s\n";
      }
      for (const auto& w : r.log.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";
      if (r.exit_status != 0) {
        std::cerr << "error: " << r.error << "\n";
      } else {
        std::cout << "bundle: " << cfg.output_dir.string() << " (" << r.bundle->files.size() << " files, seed "
                  << cfg.seed << ")\n";
      }
      return r.exit_status;
    }
    if (navigate->parsed()) {
      nav.start = to_vec(nav_start);
      nav.goal = to_vec(nav_goal);
      const NavigateResult r = run_navigate(nav_bundle, nav, nav_out);
      std::cout << "path: " << r.plan.waypoints.size() << " waypoints, " << path_length(r.plan.waypoints) << " m, "
                << r.plan.iterations_used << " iterations, " << r.frames << " frames\n";
      return 0;
    }
    if (evaluate->parsed()) {
      if (!ev_designer.empty()) {
        ev.critic.endpoint.url = ev_designer;
        ev.critic.mock = false;
      } else if (const char* env = std::getenv("URBANFORGE_DESIGNER_URL")) {
        ev.critic.endpoint.url = env;
        ev.critic.mock = false;
      }
      std::vector<std::string> warnings;
      const auto reports = run_evaluate(ev, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
      const std::string text = reports_to_json(reports);
      if (ev_out.empty()) {
        std::cout << text;
      } else {
        write_text_file(ev_out, text);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return exit_status_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return exit_status_for(ErrorCode::Internal);
  }
  return 0;
}
