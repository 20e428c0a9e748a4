#include "urbanforge/assembly.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "urbanforge/error.hpp"
#include "urbanforge/hash.hpp"
#include "urbanforge/image_io.hpp"
#include "urbanforge/parallel.hpp"

namespace urbanforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Box3 translated_bounds(const AssetMesh& mesh, const Vec3& t) {
  Box3 b = bounding_box(mesh.vertices);
  b.min += t;
  b.max += t;
  return b;
}

Box3 union_bounds(const std::vector<ManifestEntry>& entries) {
  if (entries.empty()) return {};
  Box3 b = entries.front().bounds;
  for (const auto& e : entries) {
    b.min = b.min.cwiseMin(e.bounds.min);
    b.max = b.max.cwiseMax(e.bounds.max);
  }
  return b;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Appends v/vt/f records for one entry in the world frame; indices are 1-based and offset.
void append_obj_body(std::string& out, const ManifestEntry& e, std::size_t v_offset, std::size_t vt_offset) {
  const AssetMesh& m = *e.mesh;
  for (const auto& v : m.vertices) {
    const Vec3 w = v + e.translation;
    out += "v " + fmt6(w.x()) + " " + fmt6(w.y()) + " " + fmt6(w.z()) + "\n";
  }
  for (const auto& uv : e.atlas->face_uvs) {
    for (const auto& c : uv) out += "vt " + fmt6(c.x()) + " " + fmt6(1.0 - c.y()) + "\n";
  }
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    out += "f";
    for (int c = 0; c < 3; ++c)
      out += " " + std::to_string(v_offset + m.faces[f][c] + 1) + "/" + std::to_string(vt_offset + 3 * f + c + 1);
    out += "\n";
  }
}

std::string mtl_record(const std::string& name, const std::string& map) {
  return "newmtl " + name + "\nKa 1.000000 1.000000 1.000000\nKd 1.000000 1.000000 1.000000\n"
         "Ks 0.000000 0.000000 0.000000\nd 1.000000\nillum 1\nmap_Kd " + map + "\n";
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

struct ObjData {
  std::vector<Vec3> v;
  std::vector<Vec2> vt;
  std::vector<std::array<int, 6>> f;  // v0 t0 v1 t1 v2 t2, zero-based
};

ObjData read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  ObjData d;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Vec3 p;
      ls >> p.x() >> p.y() >> p.z();
      d.v.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      ls >> t.x() >> t.y();
      d.vt.push_back(t);
    } else if (tag == "f") {
      std::array<int, 6> rec{};
      for (int c = 0; c < 3; ++c) {
        std::string tok;
        ls >> tok;
        const auto slash = tok.find('/');
        if (tok.empty() || slash == std::string::npos)
          throw Error(ErrorCode::Parse, path.string() + " line " + std::to_string(lineno) + ": expected v/vt face");
        rec[2 * c] = std::stoi(tok.substr(0, slash)) - 1;
        rec[2 * c + 1] = std::stoi(tok.substr(slash + 1)) - 1;
      }
      d.f.push_back(rec);
    }
    if (ls.fail() && !ls.eof())
      throw Error(ErrorCode::Parse, path.string() + " line " + std::to_string(lineno) + ": malformed record");
  }
  return d;
}

RgbImage render_snapshot(const ManifestEntry& e) {
  CameraView view = make_camera_rig(*e.mesh, 1).front();
  view.width = view.height = kSnapshotResolution;
  Rasterizer r(view);
  r.draw(*e.mesh, Vec3::Zero(), Shading::textured(e.atlas->face_uvs, *e.albedo));
  return r.take().rgb;
}

}  // namespace

const ManifestEntry* SceneManifest::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

ManifestEntry* SceneManifest::find(const std::string& id) {
  return const_cast<ManifestEntry*>(std::as_const(*this).find(id));
}

std::string texture_hash(const RgbImage& img) {
  std::uint64_t h = fnv1a(std::to_string(img.width) + "x" + std::to_string(img.height) + "x" + std::to_string(img.channels));
  return hex64(fnv1a(img.data, h));
}

std::string mesh_hash(const AssetMesh& mesh) {
  std::uint64_t h = fnv1a(mesh.id);
  for (const auto& v : mesh.vertices)
    h = fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(v.data()), sizeof(double) * 3), h);
  for (const auto& f : mesh.faces)
    h = fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(f.data()), sizeof(int) * 3), h);
  return hex64(h);
}

void apply_texture(ManifestEntry& entry, const TexturedAsset& t) {
  entry.atlas = t.atlas;
  entry.texture = t.texture;
  entry.albedo = t.albedo;
  entry.prompt = t.prompt;
  entry.seed = t.seed;
  entry.coverage = t.coverage;
  entry.texture_hash = texture_hash(*t.albedo);
}

SceneManifest reassemble(const ScenePlan& plan, const std::map<std::string, TexturedAsset>& textures) {
  std::vector<const AssetMesh*> meshes = plan.all_meshes();
  std::string missing;
  for (const AssetMesh* m : meshes) {
    if (!textures.contains(m->id)) missing += (missing.empty() ? "" : ", ") + m->id;
  }
  if (!missing.empty()) throw Error(ErrorCode::IncompleteScene, "no texture for: " + missing);

  SceneManifest manifest;
  for (const AssetMesh* m : meshes) {
    const TexturedAsset& t = textures.at(m->id);
    ManifestEntry e;
    e.id = m->id;
    e.category = m->category;
    e.mesh = t.mesh ? t.mesh : std::make_shared<AssetMesh>(*m);
    e.translation = m->center_world;
    e.bounds = translated_bounds(*e.mesh, e.translation);
    apply_texture(e, t);
    manifest.entries.push_back(std::move(e));
  }
  manifest.bounds = union_bounds(manifest.entries);
  return manifest;
}

std::string asset_file_stem(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return s;
}

ExportBundle export_scene(const SceneManifest& manifest, const fs::path& out_dir) {
  const fs::path target = fs::absolute(out_dir).lexically_normal();
  const fs::path staging = target.parent_path() / (target.filename().string() + ".partial");
  ExportBundle bundle;
  bundle.root = out_dir;
  try {
    fs::create_directories(target.parent_path());
    fs::remove_all(staging);
    fs::create_directories(staging / "assets");

    json assets = json::array();
    std::string scene_obj = "# urbanforge scene\nmtllib scene.mtl\n";
    std::string scene_mtl;
    std::size_t v_off = 0, vt_off = 0;
    for (const auto& e : manifest.entries) {
      if (!e.mesh || !e.atlas || !e.albedo) throw Error(ErrorCode::IncompleteScene, "entry '" + e.id + "' has no texture");
      const std::string stem = asset_file_stem(e.id);
      const std::string obj_rel = "assets/" + stem + ".obj";
      const std::string mtl_rel = "assets/" + stem + ".mtl";
      const std::string png_rel = "assets/" + stem + ".png";

      std::string obj = "# " + e.id + "\nmtllib " + stem + ".mtl\no " + stem + "\nusemtl " + stem + "\n";
      append_obj_body(obj, e, 0, 0);
      write_text_file(staging / obj_rel, obj);
      write_text_file(staging / mtl_rel, mtl_record(stem, stem + ".png"));
      write_png(staging / png_rel, *e.albedo);

      scene_obj += "o " + stem + "\nusemtl " + stem + "\n";
      append_obj_body(scene_obj, e, v_off, vt_off);
      v_off += e.mesh->vertices.size();
      vt_off += 3 * e.mesh->faces.size();
      scene_mtl += mtl_record(stem, png_rel);

      assets.push_back({{"id", e.id},
                        {"category", category_name(e.category)},
                        {"obj", obj_rel},
                        {"mtl", mtl_rel},
                        {"texture", png_rel},
                        {"translation", vec_json(e.translation)},
                        {"bounds", {{"min", vec_json(e.bounds.min)}, {"max", vec_json(e.bounds.max)}}},
                        {"prompt", e.prompt},
                        {"seed", e.seed},
                        {"texture_hash", e.texture_hash},
                        {"mesh_hash", mesh_hash(*e.mesh)},
                        {"refine_round", e.refine_round},
                        {"coverage", e.coverage},
                        {"vertex_count", e.mesh->vertices.size()},
                        {"face_count", e.mesh->faces.size()},
                        {"texels_per_meter", e.atlas->texels_per_meter}});
      for (const char* ext : {".obj", ".mtl", ".png"}) bundle.files.push_back(fs::path("assets") / (stem + ext));
    }
    write_text_file(staging / "scene.obj", scene_obj);
    write_text_file(staging / "scene.mtl", scene_mtl);
    const json doc = {{"schema_version", kManifestSchemaVersion},
                      {"instruction", manifest.instruction},
                      {"seed", manifest.seed},
                      {"refine_round", manifest.refine_round},
                      {"bounds", {{"min", vec_json(manifest.bounds.min)}, {"max", vec_json(manifest.bounds.max)}}},
                      {"scene_obj", "scene.obj"},
                      {"scene_mtl", "scene.mtl"},
                      {"assets", assets}};
    write_text_file(staging / "manifest.json", doc.dump(2) + "\n");
    bundle.files.push_back("scene.obj");
    bundle.files.push_back("scene.mtl");
    bundle.files.push_back("manifest.json");

    fs::remove_all(target);
    fs::rename(staging, target);
  } catch (const fs::filesystem_error& e) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw Error(ErrorCode::Io, std::string("export to ") + out_dir.string() + " failed: " + e.what());
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
  return bundle;
}

SceneManifest load_bundle(const fs::path& dir) {
  json doc;
  try {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "manifest.json").string());
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, "manifest.json: " + std::string(e.what()));
  }
  try {
    if (doc.at("schema_version").get<int>() != kManifestSchemaVersion)
      throw Error(ErrorCode::Parse, "unsupported manifest schema version");
    SceneManifest m;
    m.instruction = doc.at("instruction").get<std::string>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.refine_round = doc.at("refine_round").get<int>();
    m.bounds.min = json_vec(doc.at("bounds").at("min"));
    m.bounds.max = json_vec(doc.at("bounds").at("max"));
    for (const auto& a : doc.at("assets")) {
      ManifestEntry e;
      e.id = a.at("id").get<std::string>();
      const auto cat = category_from_name(a.at("category").get<std::string>());
      if (!cat) throw Error(ErrorCode::Parse, "unknown category for '" + e.id + "'");
      e.category = *cat;
      e.translation = json_vec(a.at("translation"));
      e.bounds.min = json_vec(a.at("bounds").at("min"));
      e.bounds.max = json_vec(a.at("bounds").at("max"));
      e.prompt = a.at("prompt").get<std::string>();
      e.seed = a.at("seed").get<std::uint64_t>();
      e.texture_hash = a.at("texture_hash").get<std::string>();
      e.refine_round = a.at("refine_round").get<int>();
      e.coverage = a.at("coverage").get<double>();

      const ObjData obj = read_obj(dir / a.at("obj").get<std::string>());
      auto mesh = std::make_shared<AssetMesh>();
      mesh->id = e.id;
      mesh->category = e.category;
      mesh->center_world = e.translation;
      for (const auto& v : obj.v) mesh->vertices.push_back(v - e.translation);
      auto albedo = std::make_shared<RgbImage>(read_png(dir / a.at("texture").get<std::string>()));
      if (albedo->channels != 3) throw Error(ErrorCode::Parse, e.id + ": texture is not RGB");
      auto atlas = std::make_shared<UVAtlas>();
      atlas->width = albedo->width;
      atlas->height = albedo->height;
      atlas->texels_per_meter = a.at("texels_per_meter").get<double>();
      for (const auto& f : obj.f) {
        for (int c = 0; c < 3; ++c) {
          if (f[2 * c] < 0 || f[2 * c] >= static_cast<int>(obj.v.size()) || f[2 * c + 1] < 0 ||
              f[2 * c + 1] >= static_cast<int>(obj.vt.size()))
            throw Error(ErrorCode::Parse, e.id + ": face index out of range");
        }
        mesh->faces.emplace_back(f[0], f[2], f[4]);
        FaceUVs uv;
        for (int c = 0; c < 3; ++c) uv[c] = Vec2(obj.vt[f[2 * c + 1]].x(), 1.0 - obj.vt[f[2 * c + 1]].y());
        atlas->face_uvs.push_back(uv);
      }
      compute_face_normals(*mesh);
      const TexelMap texels = build_texel_map(*atlas);
      auto tex = std::make_shared<UVTexture>(atlas->width, atlas->height);
      tex->rgb = *albedo;
      for (std::size_t i = 0; i < texels.face.size(); ++i) tex->coverage[i] = texels.valid(i) ? 1 : 0;
      e.mesh = std::move(mesh);
      e.atlas = std::move(atlas);
      e.albedo = std::move(albedo);
      e.texture = std::move(tex);
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, "manifest.json: " + std::string(e.what()));
  }
}

FrameBuffer render_scene(const SceneManifest& manifest, const CameraView& view, bool textured) {
  Rasterizer r(view);
  std::int32_t offset = 0;
  for (const auto& e : manifest.entries) {
    const bool can_texture = textured && e.atlas && e.albedo && e.atlas->face_uvs.size() == e.mesh->faces.size();
    r.draw(*e.mesh, e.translation, can_texture ? Shading::textured(e.atlas->face_uvs, *e.albedo) : Shading::category(),
           offset);
    offset += static_cast<std::int32_t>(e.mesh->faces.size());
  }
  return r.take();
}

CameraView overview_camera(const SceneManifest& manifest, int resolution) {
  const Vec3 c = manifest.bounds.center();
  const double radius = std::max(0.5 * manifest.bounds.extent().norm(), 1.0);
  CameraView v = make_camera_rig(radius, 8)[1];
  v.eye += c;
  v.target = c;
  v.width = v.height = resolution;
  return v;
}

SceneManifest refine_loop(SceneManifest manifest, const DesignBrief& brief, const RefineConfig& cfg,
                          RefineOutcome* outcome) {
  RefineOutcome local;
  RefineOutcome& out = outcome ? *outcome : local;
  for (int round = 1; round <= cfg.max_iters; ++round) {
    std::vector<Snapshot> snapshots;
    for (const auto& e : manifest.entries) {
      if (e.category == AssetCategory::Ground) continue;
      snapshots.push_back({e.id, render_snapshot(e), e.coverage});
    }
    const RgbImage overview = render_scene(manifest, overview_camera(manifest, kSnapshotResolution)).rgb;
    CritiqueReport report;
    try {
      report = critique_scene(snapshots, brief, cfg.critic, &overview);
    } catch (const Error& e) {
      out.warnings.push_back(std::string("critique round ") + std::to_string(round) + " failed: " + e.what());
      break;
    }
    manifest.refine_round = round;
    const auto flagged = report.flagged();
    out.reports.push_back(report);
    if (flagged.empty()) break;

    std::vector<std::optional<TexturedAsset>> redone(flagged.size());
    std::vector<std::string> errors(flagged.size());
    parallel_for(flagged.size(), cfg.workers, [&](std::size_t i) {
      const ManifestEntry& e = *manifest.find(flagged[i]);
      try {
        redone[i] = texture_asset(e.mesh, report.verdicts.at(e.id).new_prompt, e.seed + round, cfg.texturing, e.atlas);
      } catch (const Error& err) {
        errors[i] = err.what();
      }
    });
    for (std::size_t i = 0; i < flagged.size(); ++i) {
      ManifestEntry* e = manifest.find(flagged[i]);
      if (!redone[i]) {
        out.warnings.push_back(flagged[i] + ": re-texturing failed, keeping the previous texture: " + errors[i]);
        continue;
      }
      for (const auto& w : redone[i]->warnings) out.warnings.push_back(w);
      apply_texture(*e, *redone[i]);
      e->refine_round = round;
    }
  }
  return manifest;
}

}  // namespace urbanforge
