#include "urbanforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "urbanforge/error.hpp"

namespace urbanforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) { throw Error(ErrorCode::Config, key + ": " + why); }

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad(prefix + key, "unknown key");
  }
}

const json* field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

fs::path get_path(const json& v, const std::string& key, const fs::path& base) {
  const fs::path p = get_string(v, key);
  if (p.empty()) bad(key, "empty path");
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

int get_int(const json& v, const std::string& key, int lo, int hi) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) bad(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(x);
}

double get_positive(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!(x > 0) || !std::isfinite(x)) bad(key, "must be positive");
  return x;
}

AssetCategory parse_category(const std::string& s, const std::string& key) {
  for (AssetCategory c : kAllCategories) {
    if (s == category_name(c)) return c;
  }
  bad(key, "unknown category '" + s + "'");
}

fs::path strip_trailing(fs::path p) {
  p = p.lexically_normal();
  if (!p.has_filename() && p.has_parent_path()) p = p.parent_path();
  return p;
}

}  // namespace

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) bad("<root>", "expected an object");
  reject_unknown(doc, "", {"osm", "raster", "instruction", "reference", "endpoints", "n_views", "steps",
                           "atlas_resolution", "seed", "max_refine_iters", "workers", "force_refine",
                           "output_dir", "work_dir", "run_log"});
  RunConfig cfg;
  if (const json* v = field(doc, "osm")) cfg.osm = get_path(*v, "osm", base_dir);
  if (const json* v = field(doc, "raster")) {
    if (!v->is_object()) bad("raster", "expected an object");
    reject_unknown(*v, "raster.", {"semantic", "heights", "height_scale", "cell_size_m", "class_map"});
    RasterInput r;
    const json* sem = field(*v, "semantic");
    const json* hts = field(*v, "heights");
    if (!sem) bad("raster.semantic", "required");
    if (!hts) bad("raster.heights", "required");
    r.semantic = get_path(*sem, "raster.semantic", base_dir);
    r.heights = get_path(*hts, "raster.heights", base_dir);
    if (const json* s = field(*v, "height_scale")) r.height_scale = get_positive(*s, "raster.height_scale");
    if (const json* s = field(*v, "cell_size_m")) r.cell_size_m = get_positive(*s, "raster.cell_size_m");
    const json* cm = field(*v, "class_map");
    if (!cm || !cm->is_object() || cm->empty()) bad("raster.class_map", "expected a non-empty object");
    for (const auto& [k, val] : cm->items()) {
      const std::string key = "raster.class_map." + k;
      int id = 0;
      std::istringstream is(k);
      if (!(is >> id) || !is.eof() || id < 0 || id > 255) bad(key, "class ids are integers in [0, 255]");
      if (val.is_null()) {
        r.class_map[id] = std::nullopt;
      } else {
        r.class_map[id] = parse_category(get_string(val, key), key);
      }
    }
    cfg.raster = std::move(r);
  }
  if (cfg.osm.has_value() == cfg.raster.has_value()) bad("input", "exactly one of 'osm' and 'raster' is required");

  if (const json* v = field(doc, "instruction")) cfg.instruction = get_string(*v, "instruction");
  if (cfg.instruction.empty()) bad("instruction", "required and non-empty");
  if (const json* v = field(doc, "reference")) cfg.reference = get_path(*v, "reference", base_dir);

  if (const json* e = field(doc, "endpoints")) {
    if (!e->is_object()) bad("endpoints", "expected an object");
    reject_unknown(*e, "endpoints.", {"generator", "inpaint", "upscaler", "designer", "designer_model", "strict",
                                      "timeout_s", "retries", "max_in_flight"});
    double timeout = EndpointConfig{}.timeout_s;
    int retries = EndpointConfig{}.retries;
    int in_flight = kDefaultMaxInFlight;
    if (const json* v = field(*e, "timeout_s")) timeout = get_positive(*v, "endpoints.timeout_s");
    if (const json* v = field(*e, "retries")) retries = get_int(*v, "endpoints.retries", 0, 10);
    if (const json* v = field(*e, "max_in_flight")) in_flight = get_int(*v, "endpoints.max_in_flight", 1, 64);
    for (auto [key, ep] : {std::pair{"generator", &cfg.generator}, std::pair{"inpaint", &cfg.inpaint},
                           std::pair{"upscaler", &cfg.upscaler}, std::pair{"designer", &cfg.designer}}) {
      ep->timeout_s = timeout;
      ep->retries = retries;
      ep->max_in_flight = in_flight;
      if (const json* v = field(*e, key)) ep->url = get_string(*v, std::string("endpoints.") + key);
    }
    if (const json* v = field(*e, "designer_model")) cfg.designer_model = get_string(*v, "endpoints.designer_model");
    if (const json* v = field(*e, "strict")) {
      if (!v->is_boolean()) bad("endpoints.strict", "expected a boolean");
      cfg.strict = v->get<bool>();
    }
  }

  if (const json* v = field(doc, "n_views")) cfg.n_views = get_int(*v, "n_views", 1, 64);
  if (const json* v = field(doc, "steps")) cfg.steps = get_int(*v, "steps", 1, 1000);
  if (const json* v = field(doc, "atlas_resolution")) cfg.atlas_resolution = get_int(*v, "atlas_resolution", 16, 16384);
  if (const json* v = field(doc, "max_refine_iters")) cfg.max_refine_iters = get_int(*v, "max_refine_iters", 0, 100);
  if (const json* v = field(doc, "workers")) cfg.workers = get_int(*v, "workers", 1, 256);
  if (const json* v = field(doc, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      bad("seed", "expected a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  } else {
    std::random_device rd;
    cfg.seed = (static_cast<std::uint64_t>(rd()) << 32 | rd()) >> 1;
    cfg.seed_generated = true;
  }
  if (const json* v = field(doc, "force_refine")) {
    if (!v->is_array()) bad("force_refine", "expected an array of asset ids");
    for (const auto& id : *v) cfg.force_refine.insert(get_string(id, "force_refine"));
  }

  const json* out = field(doc, "output_dir");
  if (!out) bad("output_dir", "required");
  cfg.output_dir = strip_trailing(get_path(*out, "output_dir", base_dir));
  cfg.work_dir = cfg.output_dir;
  cfg.work_dir += ".work";
  cfg.run_log = cfg.output_dir;
  cfg.run_log += ".log.json";
  if (const json* v = field(doc, "work_dir")) cfg.work_dir = strip_trailing(get_path(*v, "work_dir", base_dir));
  if (const json* v = field(doc, "run_log")) cfg.run_log = get_path(*v, "run_log", base_dir);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, path.string() + ": " + e.what());
  }
  RunConfig cfg = parse_config(doc, fs::absolute(path).parent_path());
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(RunConfig& cfg, const EnvLookup& getenv) {
  for (auto [name, ep] : {std::pair{"URBANFORGE_GENERATOR_URL", &cfg.generator},
                          std::pair{"URBANFORGE_INPAINT_URL", &cfg.inpaint},
                          std::pair{"URBANFORGE_UPSCALER_URL", &cfg.upscaler},
                          std::pair{"URBANFORGE_DESIGNER_URL", &cfg.designer}}) {
    if (const char* v = getenv(name)) ep->url = v;
  }
}

void apply_env_overrides(RunConfig& cfg) {
  apply_env_overrides(cfg, [](const char* name) -> const char* { return std::getenv(name); });
}

json config_to_json(const RunConfig& cfg) {
  json doc;
  if (cfg.osm) doc["osm"] = cfg.osm->string();
  if (cfg.raster) {
    json cm = json::object();
    for (const auto& [id, cat] : cfg.raster->class_map) {
      cm[std::to_string(id)] = cat ? json(category_name(*cat)) : json(nullptr);
    }
    doc["raster"] = {{"semantic", cfg.raster->semantic.string()},
                     {"heights", cfg.raster->heights.string()},
                     {"height_scale", cfg.raster->height_scale},
                     {"cell_size_m", cfg.raster->cell_size_m},
                     {"class_map", cm}};
  }
  doc["instruction"] = cfg.instruction;
  if (cfg.reference) doc["reference"] = cfg.reference->string();
  doc["endpoints"] = {{"generator", cfg.generator.url},
                      {"inpaint", cfg.inpaint.url},
                      {"upscaler", cfg.upscaler.url},
                      {"designer", cfg.designer.url},
                      {"designer_model", cfg.designer_model},
                      {"strict", cfg.strict},
                      {"timeout_s", cfg.generator.timeout_s},
                      {"retries", cfg.generator.retries},
                      {"max_in_flight", cfg.generator.max_in_flight}};
  doc["n_views"] = cfg.n_views;
  doc["steps"] = cfg.steps;
  doc["atlas_resolution"] = cfg.atlas_resolution;
  doc["max_refine_iters"] = cfg.max_refine_iters;
  doc["workers"] = cfg.workers;
  doc["seed"] = cfg.seed;
  doc["force_refine"] = cfg.force_refine;
  doc["output_dir"] = cfg.output_dir.string();
  doc["work_dir"] = cfg.work_dir.string();
  doc["run_log"] = cfg.run_log.string();
  return doc;
}

}  // namespace urbanforge
