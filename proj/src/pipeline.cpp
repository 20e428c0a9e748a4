#include "urbanforge/pipeline.hpp"

#include <fstream>

#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/image_io.hpp"
#include "urbanforge/parallel.hpp"

namespace urbanforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kArtifactVersion = 1;

class Hasher {
 public:
  Hasher& add(std::string_view s) {
    h_ = fnv1a(s, h_);
    h_ = fnv1a(std::string_view("\x1f", 1), h_);
    return *this;
  }
  Hasher& add(double v) { return add(json(v).dump()); }
  Hasher& add(std::int64_t v) { return add(std::to_string(v)); }
  Hasher& add(std::uint64_t v) { return add(std::to_string(v)); }
  Hasher& add(int v) { return add(std::to_string(v)); }
  Hasher& add_file(const fs::path& p) {
    const auto bytes = read_file(p);
    h_ = fnv1a(std::span<const std::uint8_t>(bytes), h_);
    return add(std::string_view{});
  }
  std::string hex() const { return hex64(h_); }

 private:
  std::uint64_t h_ = kFnvOffset;
};

fs::path stamp_of(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".stamp";
  return p;
}

bool stamp_matches(const fs::path& artifact, const std::string& hash) {
  std::ifstream in(stamp_of(artifact));
  std::string s;
  return in && std::getline(in, s) && s == hash && fs::exists(artifact);
}

void write_stamp(const fs::path& artifact, const std::string& hash) { write_text_file(stamp_of(artifact), hash + "\n"); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& doc) { write_text_file(p, doc.dump(1) + "\n"); }

template <typename V>
json flat(const std::vector<V>& vs) {
  json a = json::array();
  for (const auto& v : vs) {
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  }
  return a;
}

template <typename V>
std::vector<V> unflat(const json& a) {
  constexpr int n = V::RowsAtCompileTime;
  if (!a.is_array() || a.size() % n != 0) throw Error(ErrorCode::Parse, "flat vector array has the wrong length");
  std::vector<V> out(a.size() / n);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int k = 0; k < n; ++k) out[i][k] = a[i * n + k].get<typename V::Scalar>();
  }
  return out;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const json& a) { return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; }

AssetCategory category_from(const std::string& s) {
  for (AssetCategory c : kAllCategories) {
    if (s == category_name(c)) return c;
  }
  throw Error(ErrorCode::Parse, "unknown category '" + s + "'");
}

json mesh_to_json(const AssetMesh& m) {
  return {{"id", m.id},
          {"category", category_name(m.category)},
          {"vertices", flat(m.vertices)},
          {"faces", flat(m.faces)},
          {"face_normals", flat(m.face_normals)},
          {"center_world", vec_json(m.center_world)}};
}

AssetMesh mesh_from_json(const json& d) {
  AssetMesh m;
  m.id = d.at("id").get<std::string>();
  m.category = category_from(d.at("category").get<std::string>());
  m.vertices = unflat<Vec3>(d.at("vertices"));
  m.faces = unflat<Tri>(d.at("faces"));
  m.face_normals = unflat<Vec3>(d.at("face_normals"));
  m.center_world = vec_from(d.at("center_world"));
  return m;
}

RgbImage to_rgb(const Image<std::uint8_t>& img) {
  if (img.channels == 3) return img;
  RgbImage out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = img.data[i * img.channels + (img.channels >= 3 ? c : 0)];
  }
  return out;
}

std::optional<RgbImage> load_reference(const RunConfig& cfg) {
  if (!cfg.reference) return std::nullopt;
  return to_rgb(read_png(*cfg.reference));
}

void hash_reference(Hasher& h, const RunConfig& cfg) {
  if (cfg.reference) {
    h.add_file(*cfg.reference);
  } else {
    h.add("no-reference");
  }
}

fs::path texture_base(const RunConfig& cfg, const std::string& id) { return texture_dir(cfg) / asset_file_stem(id); }

fs::path with_suffix(fs::path p, const char* suffix) {
  p += suffix;
  return p;
}

std::string texture_input_hash(const RunConfig& cfg, const AssetMesh& mesh, const std::string& prompt,
                               std::uint64_t seed) {
  Hasher h;
  h.add("texture").add(kArtifactVersion).add(mesh_hash(mesh)).add(prompt).add(seed);
  h.add(cfg.n_views).add(cfg.steps).add(cfg.atlas_resolution);
  h.add(cfg.generator.url).add(cfg.inpaint.url).add(cfg.upscaler.url).add(cfg.strict ? 1 : 0);
  hash_reference(h, cfg);
  return h.hex();
}

void save_textured(const TexturedAsset& t, const fs::path& base) {
  write_png(with_suffix(base, ".png"), t.texture->rgb);
  write_file(with_suffix(base, ".cov.pgm"),
             encode_pgm(coverage_image(t.texture->coverage, t.texture->width(), t.texture->height())));
  write_json(with_suffix(base, ".atlas.json"), atlas_to_json(*t.atlas));
  write_json(with_suffix(base, ".json"), {{"prompt", t.prompt},
                                          {"seed", t.seed},
                                          {"projected_coverage", t.projected_coverage},
                                          {"coverage", t.coverage},
                                          {"warnings", t.warnings}});
}

TexturedAsset load_textured(std::shared_ptr<const AssetMesh> mesh, const fs::path& base) {
  TexturedAsset t;
  t.mesh = std::move(mesh);
  const json meta = read_json(with_suffix(base, ".json"));
  t.prompt = meta.at("prompt").get<std::string>();
  t.seed = meta.at("seed").get<std::uint64_t>();
  t.projected_coverage = meta.at("projected_coverage").get<double>();
  t.coverage = meta.at("coverage").get<double>();
  t.warnings = meta.at("warnings").get<std::vector<std::string>>();
  t.atlas = std::make_shared<UVAtlas>(atlas_from_json(read_json(with_suffix(base, ".atlas.json"))));
  UVTexture tex;
  tex.rgb = to_rgb(read_png(with_suffix(base, ".png")));
  const GrayImage cov = read_gray(with_suffix(base, ".cov.pgm"));
  if (cov.width != tex.width() || cov.height != tex.height())
    throw Error(ErrorCode::Shape, base.string() + ": coverage and texture sizes differ");
  tex.coverage.resize(cov.data.size());
  for (std::size_t i = 0; i < cov.data.size(); ++i) tex.coverage[i] = cov.data[i] ? 1 : 0;
  t.albedo = std::make_shared<RgbImage>(dilate_gutter(tex, kExportDilationRings));
  t.texture = std::make_shared<UVTexture>(std::move(tex));
  return t;
}

std::string asset_prompt(const RunConfig& cfg, const DesignBrief& brief, const AssetMesh& mesh) {
  if (mesh.category == AssetCategory::Ground) return ground_description(cfg.instruction);
  const auto it = brief.descriptions.find(mesh.id);
  if (it == brief.descriptions.end()) throw Error(ErrorCode::MalformedDesign, "design brief has no description for " + mesh.id);
  return it->second;
}

fs::path assemble_stamp_artifact(const RunConfig& cfg) { return cfg.work_dir / "assemble"; }

}  // namespace

void RunLog::stage(const std::string& name, double seconds, bool cached, const std::string& input_hash, json extra) {
  json s = {{"stage", name}, {"seconds", seconds}, {"cached", cached}, {"input_hash", input_hash}};
  for (auto& [k, v] : extra.items()) s[k] = v;
  stages_.push_back(std::move(s));
}

json RunLog::to_json() const {
  json doc = fields_;
  doc["stages"] = stages_;
  doc["warnings"] = warnings_;
  return doc;
}

void RunLog::write(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, to_json().dump(2) + "\n");
}

StageResult run_stage(const std::string& name, StageFn fn, const RunConfig& cfg, RunLog& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const StageResult r = fn(cfg, log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.stage(name, secs, r.cached, r.input_hash);
  return r;
}

fs::path plan_path(const RunConfig& cfg) { return cfg.work_dir / "plan.json"; }
fs::path brief_path(const RunConfig& cfg) { return cfg.work_dir / "brief.json"; }
fs::path texture_dir(const RunConfig& cfg) { return cfg.work_dir / "textures"; }

void save_plan(const ScenePlan& plan, const fs::path& path) {
  json assets = json::array();
  for (const auto& a : plan.assets) assets.push_back(mesh_to_json(a));
  json failures = json::array();
  for (const auto& f : plan.failures) failures.push_back({{"element_id", f.element_id}, {"message", f.message}});
  write_json(path, {{"version", kArtifactVersion},
                    {"assets", assets},
                    {"ground", mesh_to_json(plan.ground)},
                    {"layout_bounds",
                     {plan.layout_bounds.min.x(), plan.layout_bounds.min.y(), plan.layout_bounds.max.x(),
                      plan.layout_bounds.max.y()}},
                    {"failures", failures}});
}

ScenePlan load_plan(const fs::path& path) {
  const json d = read_json(path);
  try {
    ScenePlan plan;
    for (const auto& a : d.at("assets")) plan.assets.push_back(mesh_from_json(a));
    plan.ground = mesh_from_json(d.at("ground"));
    const auto& b = d.at("layout_bounds");
    plan.layout_bounds.min = {b.at(0).get<double>(), b.at(1).get<double>()};
    plan.layout_bounds.max = {b.at(2).get<double>(), b.at(3).get<double>()};
    for (const auto& f : d.at("failures")) {
      plan.failures.push_back({f.at("element_id").get<std::string>(), f.at("message").get<std::string>()});
    }
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void save_brief(const DesignBrief& brief, const fs::path& path) {
  write_json(path, {{"descriptions", brief.descriptions}, {"palette_notes", brief.palette_notes}});
}

DesignBrief load_brief(const fs::path& path) {
  const json d = read_json(path);
  try {
    DesignBrief b;
    b.descriptions = d.at("descriptions").get<std::map<std::string, std::string>>();
    b.palette_notes = d.at("palette_notes").get<std::string>();
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

json atlas_to_json(const UVAtlas& atlas) {
  json uvs = json::array();
  for (const auto& f : atlas.face_uvs) {
    for (const auto& p : f) {
      uvs.push_back(p.x());
      uvs.push_back(p.y());
    }
  }
  json islands = json::array();
  for (const auto& is : atlas.islands) {
    islands.push_back({{"faces", is.faces},
                       {"axis", vec_json(is.axis)},
                       {"u_axis", vec_json(is.u_axis)},
                       {"v_axis", vec_json(is.v_axis)},
                       {"min_u", is.min_u},
                       {"max_v", is.max_v},
                       {"extent", {is.extent.x(), is.extent.y()}},
                       {"rect", {is.x, is.y, is.w, is.h}}});
  }
  return {{"width", atlas.width},
          {"height", atlas.height},
          {"texels_per_meter", atlas.texels_per_meter},
          {"face_uvs", uvs},
          {"islands", islands},
          {"face_island", atlas.face_island}};
}

UVAtlas atlas_from_json(const json& d) {
  try {
    UVAtlas a;
    a.width = d.at("width").get<int>();
    a.height = d.at("height").get<int>();
    a.texels_per_meter = d.at("texels_per_meter").get<double>();
    const auto uv = unflat<Vec2>(d.at("face_uvs"));
    if (uv.size() % 3 != 0) throw Error(ErrorCode::Parse, "atlas face_uvs length is not a multiple of 3");
    a.face_uvs.resize(uv.size() / 3);
    for (std::size_t f = 0; f < a.face_uvs.size(); ++f) a.face_uvs[f] = {uv[3 * f], uv[3 * f + 1], uv[3 * f + 2]};
    for (const auto& j : d.at("islands")) {
      UVIsland is;
      is.faces = j.at("faces").get<std::vector<int>>();
      is.axis = vec_from(j.at("axis"));
      is.u_axis = vec_from(j.at("u_axis"));
      is.v_axis = vec_from(j.at("v_axis"));
      is.min_u = j.at("min_u").get<double>();
      is.max_v = j.at("max_v").get<double>();
      is.extent = {j.at("extent").at(0).get<double>(), j.at("extent").at(1).get<double>()};
      const auto& r = j.at("rect");
      is.x = r.at(0).get<int>();
      is.y = r.at(1).get<int>();
      is.w = r.at(2).get<int>();
      is.h = r.at(3).get<int>();
      a.islands.push_back(std::move(is));
    }
    a.face_island = d.at("face_island").get<std::vector<int>>();
    return a;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("atlas: ") + e.what());
  }
}

GeoLayout ingest_layout(const RunConfig& cfg) {
  if (cfg.osm) {
    const auto bytes = read_file(*cfg.osm);
    return parse_osm(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  const RasterInput& in = *cfg.raster;
  const GrayImage sem = read_gray(in.semantic);
  const GrayImage hts = read_gray(in.heights);
  if (sem.width != hts.width || sem.height != hts.height)
    throw Error(ErrorCode::Shape, "semantic and height maps differ in size");
  RasterLayout r;
  r.width = sem.width;
  r.height = sem.height;
  r.cell_size_m = in.cell_size_m;
  r.semantic.assign(sem.data.begin(), sem.data.end());
  r.heights.resize(hts.data.size());
  for (std::size_t i = 0; i < hts.data.size(); ++i) r.heights[i] = hts.data[i] * in.height_scale;
  return parse_raster_layout(r, in.class_map);
}

TexturingConfig texturing_config(const RunConfig& cfg) {
  TexturingConfig t;
  t.n_views = cfg.n_views;
  t.steps = cfg.steps;
  t.atlas_resolution = cfg.atlas_resolution;
  t.generator.mode = cfg.generator.configured() ? GeneratorMode::Remote : GeneratorMode::Procedural;
  t.generator.generate = cfg.generator;
  t.generator.inpaint = cfg.inpaint;
  t.generator.upscale = cfg.upscaler;
  t.generator.strict = cfg.strict;
  t.reference = load_reference(cfg);
  return t;
}

DesignerConfig designer_config(const RunConfig& cfg) {
  DesignerConfig d;
  d.endpoint = cfg.designer;
  d.model = cfg.designer_model;
  d.mock = !cfg.designer.configured();
  d.mock_force_refine = cfg.force_refine;
  return d;
}

StageResult stage_ingest(const RunConfig& cfg, RunLog& log) {
  Hasher h;
  h.add("ingest").add(kArtifactVersion);
  if (cfg.osm) {
    h.add("osm").add_file(*cfg.osm);
  } else {
    h.add("raster").add_file(cfg.raster->semantic).add_file(cfg.raster->heights);
    h.add(cfg.raster->height_scale).add(cfg.raster->cell_size_m).add(config_to_json(cfg).at("raster").dump());
  }
  StageResult r{false, h.hex()};
  const fs::path out = plan_path(cfg);
  if (stamp_matches(out, r.input_hash)) {
    r.cached = true;
    return r;
  }
  const GeoLayout layout = ingest_layout(cfg);
  for (const auto& w : layout.warnings) log.warn("ingest: " + w);
  const ScenePlan plan = assemble_scene_plan(layout);
  for (const auto& f : plan.failures) log.warn("ingest: " + f.element_id + ": " + f.message);
  if (plan.assets.empty()) throw Error(ErrorCode::EmptyScene, "layout produced no assets");
  fs::create_directories(cfg.work_dir);
  save_plan(plan, out);
  write_stamp(out, r.input_hash);
  return r;
}

StageResult stage_design(const RunConfig& cfg, RunLog&) {
  Hasher h;
  h.add("design").add(kArtifactVersion).add_file(plan_path(cfg)).add(cfg.instruction);
  hash_reference(h, cfg);
  const DesignerConfig dc = designer_config(cfg);
  h.add(dc.mock ? "mock" : dc.endpoint.url).add(dc.model).add(dc.temperature);
  StageResult r{false, h.hex()};
  const fs::path out = brief_path(cfg);
  if (stamp_matches(out, r.input_hash)) {
    r.cached = true;
    return r;
  }
  const ScenePlan plan = load_plan(plan_path(cfg));
  const ScenePrompt prompt{cfg.instruction, load_reference(cfg)};
  save_brief(design_scene(prompt, plan, dc), out);
  write_stamp(out, r.input_hash);
  return r;
}

StageResult stage_texture(const RunConfig& cfg, RunLog& log) {
  const ScenePlan plan = load_plan(plan_path(cfg));
  const DesignBrief brief = load_brief(brief_path(cfg));
  const auto meshes = plan.all_meshes();
  std::vector<std::string> hashes(meshes.size()), prompts(meshes.size());
  std::vector<std::uint64_t> seeds(meshes.size());
  std::vector<std::size_t> todo;
  json seed_log = json::object();
  Hasher all;
  all.add("texture-stage");
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    prompts[i] = asset_prompt(cfg, brief, *meshes[i]);
    seeds[i] = asset_seed(cfg.seed, meshes[i]->id);
    hashes[i] = texture_input_hash(cfg, *meshes[i], prompts[i], seeds[i]);
    seed_log[meshes[i]->id] = seeds[i];
    all.add(hashes[i]);
    if (!stamp_matches(with_suffix(texture_base(cfg, meshes[i]->id), ".png"), hashes[i])) todo.push_back(i);
  }
  log.set("asset_seeds", seed_log);
  StageResult r{todo.empty(), all.hex()};
  if (todo.empty()) return r;

  fs::create_directories(texture_dir(cfg));
  const TexturingConfig tc = texturing_config(cfg);
  std::vector<std::vector<std::string>> warnings(todo.size());
  parallel_for(todo.size(), cfg.workers, [&](std::size_t k) {
    const std::size_t i = todo[k];
    auto mesh = std::make_shared<const AssetMesh>(*meshes[i]);
    const TexturedAsset t = texture_asset(mesh, prompts[i], seeds[i], tc);
    const fs::path base = texture_base(cfg, mesh->id);
    save_textured(t, base);
    write_stamp(with_suffix(base, ".png"), hashes[i]);
    for (const auto& w : t.warnings) warnings[k].push_back(mesh->id + ": " + w);
  });
  for (const auto& ws : warnings) {
    for (const auto& w : ws) log.warn("texture: " + w);
  }
  return r;
}

StageResult stage_assemble(const RunConfig& cfg, RunLog& log) {
  const ScenePlan plan = load_plan(plan_path(cfg));
  Hasher h;
  h.add("assemble").add(kArtifactVersion).add_file(plan_path(cfg)).add_file(brief_path(cfg));
  for (const AssetMesh* m : plan.all_meshes()) {
    const fs::path base = texture_base(cfg, m->id);
    h.add_file(stamp_of(with_suffix(base, ".png")));
  }
  h.add(cfg.max_refine_iters).add(cfg.seed).add(cfg.instruction).add(cfg.designer.url).add(cfg.designer_model);
  for (const auto& id : cfg.force_refine) h.add(id);
  h.add(texture_input_hash(cfg, plan.ground, "", 0));
  StageResult r{false, h.hex()};
  const fs::path stamp = assemble_stamp_artifact(cfg);
  if (fs::exists(cfg.output_dir / "manifest.json") && stamp_matches(stamp, r.input_hash)) {
    r.cached = true;
    return r;
  }

  std::map<std::string, TexturedAsset> textures;
  for (const AssetMesh* m : plan.all_meshes()) {
    textures.emplace(m->id, load_textured(std::make_shared<const AssetMesh>(*m), texture_base(cfg, m->id)));
  }
  SceneManifest manifest = reassemble(plan, textures);
  manifest.instruction = cfg.instruction;
  manifest.seed = cfg.seed;

  RefineConfig rc;
  rc.max_iters = cfg.max_refine_iters;
  rc.critic = designer_config(cfg);
  rc.texturing = texturing_config(cfg);
  rc.workers = cfg.workers;
  RefineOutcome outcome;
  manifest = refine_loop(std::move(manifest), load_brief(brief_path(cfg)), rc, &outcome);
  json rounds = json::array();
  for (const auto& rep : outcome.reports) rounds.push_back(rep.flagged());
  log.set("refine_flagged", rounds);
  log.set("refine_rounds", manifest.refine_round);
  for (const auto& w : outcome.warnings) log.warn("refine: " + w);

  const ExportBundle bundle = export_scene(manifest, cfg.output_dir);
  log.set("bundle_files", bundle.files.size());
  write_text_file(stamp, "assemble\n");
  write_stamp(stamp, r.input_hash);
  return r;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  PipelineResult result;
  RunLog log;
  log.set("config", config_to_json(cfg));
  log.set("seed", cfg.seed);
  log.set("seed_generated", cfg.seed_generated);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    run_stage("ingest", stage_ingest, cfg, log);
    run_stage("design", stage_design, cfg, log);
    run_stage("texture", stage_texture, cfg, log);
    run_stage("assemble", stage_assemble, cfg, log);
    ExportBundle b;
    b.root = cfg.output_dir;
    for (const auto& e : fs::recursive_directory_iterator(cfg.output_dir)) {
      if (e.is_regular_file()) b.files.push_back(e.path());
    }
    std::sort(b.files.begin(), b.files.end());
    result.bundle = std::move(b);
    log.set("status", "ok");
  } catch (const Error& e) {
    result.exit_status = exit_status_for(e.code());
    result.error = std::string(error_code_name(e.code())) + ": " + e.what();
    log.set("status", "failed");
    log.set("error", {{"code", error_code_name(e.code())}, {"message", e.what()}});
  } catch (const std::exception& e) {
    result.exit_status = exit_status_for(ErrorCode::Internal);
    result.error = std::string("InternalError: ") + e.what();
    log.set("status", "failed");
    log.set("error", {{"code", "InternalError"}, {"message", e.what()}});
  }
  log.set("total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  log.set("exit_status", result.exit_status);
  result.log = log.to_json();
  try {
    log.write(cfg.run_log);
  } catch (const std::exception& e) {
    if (result.exit_status == 0) {
      result.exit_status = exit_status_for(ErrorCode::Io);
      result.error = std::string("IoError: run log: ") + e.what();
    }
  }
  return result;
}

NavigateResult run_navigate(const fs::path& bundle_dir, const NavigateOptions& opts, const fs::path& out_dir) {
  const SceneManifest manifest = load_bundle(bundle_dir);
  const OccupancyGrid grid = voxelize(manifest, opts.resolution);
  NavigateResult r;
  r.plan = plan_rrt(grid, opts.start, opts.goal, opts.rrt);
  const auto obs = record_trajectory(manifest, r.plan, opts.stride_m, opts.intrinsics);
  export_trajectory(obs, out_dir);
  json wps = json::array();
  for (const auto& p : r.plan.waypoints) wps.push_back(vec_json(p));
  write_json(out_dir / "plan.json", {{"waypoints", wps},
                                     {"iterations_used", r.plan.iterations_used},
                                     {"rng_seed", r.plan.rng_seed},
                                     {"length_m", path_length(r.plan.waypoints)},
                                     {"resolution", opts.resolution},
                                     {"occupied_voxels", grid.occupied_count()}});
  r.frames = obs.size();
  return r;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == extension) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<RgbImage> scene_snapshots(const SceneManifest& manifest, int n, int resolution) {
  const Vec3 c = manifest.bounds.center();
  const double radius = std::max(0.5 * manifest.bounds.extent().norm(), 1.0);
  std::vector<RgbImage> out;
  for (CameraView v : make_camera_rig(radius, n)) {
    v.eye += c;
    v.target = c;
    v.width = v.height = resolution;
    out.push_back(render_scene(manifest, v).rgb);
  }
  return out;
}

std::vector<MetricReport> run_evaluate(const EvaluateOptions& opts, std::vector<std::string>* warnings) {
  const HistogramExtractor extractor;
  auto features = [&](const std::optional<fs::path>& file, const std::optional<fs::path>& images) {
    std::vector<FeatureVector> f;
    if (file) {
      f = read_feature_file(*file);
    } else if (images) {
      for (const auto& p : list_files(*images, ".png")) f.push_back(extractor.extract(to_rgb(read_png(p))));
    }
    return f;
  };
  std::vector<MetricReport> reports;
  const auto gen = features(opts.generated_features, opts.generated_images);
  const auto ref = features(opts.reference_features, opts.reference_images);
  const std::string gen_id = gen.empty() ? "" : gen.front().extractor_id;
  if (!gen.empty() && !ref.empty()) {
    const std::map<std::string, std::size_t> counts{{"generated", gen.size()}, {"reference", ref.size()}};
    reports.push_back({"FID", fid(gen, ref), counts, gen_id, {}});
    reports.push_back({"KID", kid(gen, ref), counts, gen_id, {{"kid_raw", json(kid_raw(gen, ref)).dump()}}});
  }
  if (!gen.empty()) reports.push_back({"HI", homogeneity_index(gen), {{"generated", gen.size()}}, gen_id, {}});

  if (opts.pred_depth && opts.truth_depth) {
    auto load = [](const fs::path& dir) {
      std::vector<DepthFrame> frames;
      for (const auto& p : list_files(dir, ".png")) {
        const auto img = decode_png16(read_file(p));
        if (img.channels != 1) throw Error(ErrorCode::Shape, p.string() + " is not a single-channel depth image");
        DepthFrame f{img.width, img.height, {}};
        f.values.reserve(img.data.size());
        for (auto v : img.data) f.values.push_back(v == 0 ? INFINITY : double(v));
        frames.push_back(std::move(f));
      }
      return frames;
    };
    const auto pred = load(*opts.pred_depth);
    const auto truth = load(*opts.truth_depth);
    reports.push_back({"DE", depth_error(pred, truth), {{"frames", pred.size()}}, "", {{"normalization", "per-frame min-max"}}});
  }

  if (opts.bundle) {
    const auto snaps = scene_snapshots(load_bundle(*opts.bundle), opts.snapshot_views, kSnapshotResolution);
    try {
      reports.push_back({"PS", preference_score(snaps, opts.critic), {{"snapshots", snaps.size()}}, "",
                         {{"critic", opts.critic.mock ? "mock" : opts.critic.model}}});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CriticUnavailable) throw;
      if (warnings) warnings->push_back(std::string("PS skipped: ") + e.what());
    }
  }
  if (reports.empty() && (!warnings || warnings->empty()))
    throw Error(ErrorCode::Config, "evaluate: no metric inputs given");
  return reports;
}

}  // namespace urbanforge
