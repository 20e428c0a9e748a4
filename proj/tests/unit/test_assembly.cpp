#include <doctest.h>

#include <fstream>

#include "urbanforge/assembly.hpp"
#include "urbanforge/error.hpp"

#include "support/fixtures.hpp"
#include "support/mock_server.hpp"
#include "support/oracles.hpp"

using namespace urbanforge;
namespace fs = std::filesystem;

namespace {

AssetMesh placed_box(const std::string& id, double side, double height, const Vec3& center) {
  AssetMesh m = fixture::building_box(side, height, id);
  m.center_world = center;
  return m;
}

ScenePlan three_assets() {
  return fixture::plan_of({placed_box("a", 6, 8, {10, 5, 4}), placed_box("b", 4, 12, {-8, 3, 6}), placed_box("c", 5, 5, {0, -9, 2.5})});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> texture_hashes(const SceneManifest& m) {
  std::map<std::string, std::string> out;
  for (const auto& e : m.entries) out[e.id] = e.texture_hash;
  return out;
}

DesignBrief brief_of(const SceneManifest& m) {
  DesignBrief b;
  for (const auto& e : m.entries) b.descriptions[e.id] = e.prompt;
  return b;
}

RefineConfig refine_cfg(int iters) {
  RefineConfig cfg;
  cfg.max_iters = iters;
  cfg.texturing = fixture::fast_texturing(128);
  return cfg;
}

}  // namespace

TEST_CASE("reassemble: translation is the recorded center") {
  const ScenePlan plan = fixture::plan_of({placed_box("a", 4, 12, {10, 5, 6})});
  const SceneManifest m = fixture::textured_manifest(plan);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].id == "a");
  CHECK(m.entries[0].translation == Vec3(10, 5, 6));
  CHECK(m.entries.back().category == AssetCategory::Ground);
}

TEST_CASE("reassemble: bounds are the union of translated boxes") {
  const ScenePlan plan = three_assets();
  const SceneManifest m = fixture::textured_manifest(plan);
  Vec3 lo = Vec3::Constant(INFINITY), hi = Vec3::Constant(-INFINITY);
  for (const AssetMesh* a : plan.all_meshes()) {
    for (const auto& v : a->vertices) {
      lo = lo.cwiseMin(v + a->center_world);
      hi = hi.cwiseMax(v + a->center_world);
    }
  }
  CHECK((m.bounds.min - lo).norm() < 1e-12);
  CHECK((m.bounds.max - hi).norm() < 1e-12);
  const ManifestEntry* b = m.find("b");
  REQUIRE(b);
  CHECK((b->bounds.min - Vec3(-10, 1, 0)).norm() < 1e-12);
  CHECK((b->bounds.max - Vec3(-6, 5, 12)).norm() < 1e-12);
}

TEST_CASE("reassemble: a missing texture names exactly that asset") {
  const ScenePlan plan = three_assets();
  std::map<std::string, TexturedAsset> tex;
  for (const AssetMesh* m : plan.all_meshes()) {
    if (m->id == "b") continue;
    tex.emplace(m->id, texture_asset(std::make_shared<const AssetMesh>(*m), "x", 1, fixture::fast_texturing(64)));
  }
  try {
    reassemble(plan, tex);
    FAIL("expected IncompleteScene");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IncompleteScene);
    const std::string msg = e.what();
    CHECK(msg.substr(msg.rfind(": ") + 2) == "b");
  }
}

TEST_CASE("export_scene: file counts, relative references, determinism") {
  const SceneManifest m = fixture::textured_manifest(three_assets());
  const fs::path root = fixture::scratch("export");
  const ExportBundle a = export_scene(m, root / "a");
  export_scene(m, root / "b");
  std::size_t objs = 0, pngs = 0;
  for (const auto& f : fs::recursive_directory_iterator(root / "a")) {
    objs += f.path().extension() == ".obj";
    pngs += f.path().extension() == ".png";
  }
  const std::size_t n = m.entries.size();
  CHECK(objs == n + 1);
  CHECK(pngs == n);
  CHECK_FALSE(fs::exists(root / "a.partial"));
  for (const auto& rel : a.files) {
    CHECK(rel.is_relative());
    CHECK(fs::exists(root / "a" / rel));
    CHECK(slurp(root / "a" / rel) == slurp(root / "b" / rel));
  }
}

TEST_CASE("export_scene: OBJ re-import matches the world-frame mesh") {
  const SceneManifest m = fixture::textured_manifest(three_assets());
  const fs::path root = fixture::scratch("obj");
  export_scene(m, root);
  std::size_t total_v = 0, total_f = 0;
  for (const auto& e : m.entries) {
    const auto obj = oracle::read_obj((root / "assets" / (asset_file_stem(e.id) + ".obj")).string());
    REQUIRE(obj.v.size() == e.mesh->vertices.size());
    CHECK(obj.f.size() == e.mesh->faces.size());
    double worst = 0;
    for (std::size_t i = 0; i < obj.v.size(); ++i) worst = std::max(worst, (obj.v[i] - (e.mesh->vertices[i] + e.translation)).norm());
    CHECK(worst <= 1e-5);
    for (std::size_t f = 0; f < obj.f.size(); ++f) {
      for (int k = 0; k < 3; ++k) {
        CHECK(obj.f[f][k][0] == e.mesh->faces[f][k]);
        REQUIRE(obj.f[f][k][1] >= 0);
        REQUIRE(obj.f[f][k][1] < static_cast<int>(obj.vt.size()));
        const Vec2 uv = obj.vt[obj.f[f][k][1]];
        CHECK(std::abs(uv.x() - e.atlas->face_uvs[f][k].x()) <= 1e-6);
        CHECK(std::abs(uv.y() - (1.0 - e.atlas->face_uvs[f][k].y())) <= 1e-6);
      }
    }
    total_v += obj.v.size();
    total_f += obj.f.size();
  }
  const auto scene = oracle::read_obj((root / "scene.obj").string());
  CHECK(scene.v.size() == total_v);
  CHECK(scene.f.size() == total_f);
  for (const auto& f : scene.f)
    for (const auto& c : f) CHECK((c[0] >= 0 && c[0] < static_cast<int>(total_v)));
}

TEST_CASE("export_scene: unwritable destination is an IO error") {
  const SceneManifest m = fixture::textured_manifest(fixture::plan_of({placed_box("a", 4, 4, {0, 0, 2})}));
  const fs::path root = fixture::scratch("unwritable");
  std::ofstream(root / "file") << "x";
  try {
    export_scene(m, root / "file" / "out");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("load_bundle restores ids, translations and provenance") {
  SceneManifest m = fixture::textured_manifest(three_assets());
  m.instruction = "harbor";
  m.seed = 99;
  const fs::path root = fixture::scratch("load");
  export_scene(m, root);
  const SceneManifest back = load_bundle(root);
  REQUIRE(back.entries.size() == m.entries.size());
  CHECK(back.instruction == "harbor");
  CHECK(back.seed == 99);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(back.entries[i].id == m.entries[i].id);
    CHECK((back.entries[i].translation - m.entries[i].translation).norm() <= 1e-5);
    CHECK(back.entries[i].seed == m.entries[i].seed);
    CHECK(back.entries[i].prompt == m.entries[i].prompt);
    CHECK(back.entries[i].mesh->faces == m.entries[i].mesh->faces);
  }
}

TEST_CASE("refine_loop: zero iterations leaves the manifest unchanged") {
  const SceneManifest m = fixture::textured_manifest(three_assets());
  RefineConfig cfg = refine_cfg(0);
  cfg.critic.mock_force_refine = {"a"};
  const SceneManifest out = refine_loop(m, brief_of(m), cfg);
  CHECK(out.refine_round == 0);
  CHECK(texture_hashes(out) == texture_hashes(m));
}

TEST_CASE("refine_loop: only the flagged asset changes, geometry never does") {
  const SceneManifest m = fixture::textured_manifest(three_assets());
  RefineConfig cfg = refine_cfg(1);
  cfg.critic.mock_force_refine = {"b"};
  RefineOutcome outcome;
  const SceneManifest out = refine_loop(m, brief_of(m), cfg, &outcome);
  CHECK(out.refine_round == 1);
  REQUIRE(outcome.reports.size() == 1);
  CHECK(outcome.reports[0].flagged() == std::vector<std::string>{"b"});
  for (const auto& e : out.entries) {
    const ManifestEntry& before = *m.find(e.id);
    CHECK(mesh_hash(*e.mesh) == mesh_hash(*before.mesh));
    CHECK(e.translation == before.translation);
    if (e.id == "b") {
      CHECK(e.texture_hash != before.texture_hash);
      CHECK(e.seed == before.seed + 1);
      CHECK(e.refine_round == 1);
      CHECK(e.prompt == before.prompt + std::string(kRefineSuffix));
    } else {
      CHECK(e.texture_hash == before.texture_hash);
      CHECK(*e.albedo == *before.albedo);
    }
  }
  const fs::path root = fixture::scratch("refine");
  export_scene(m, root / "before");
  export_scene(out, root / "after");
  for (const char* id : {"a", "c", "ground"}) CHECK(slurp(root / "before/assets" / (std::string(id) + ".png")) == slurp(root / "after/assets" / (std::string(id) + ".png")));
  CHECK(slurp(root / "before/assets/b.png") != slurp(root / "after/assets/b.png"));
}

TEST_CASE("refine_loop: stops after the first round when everything is accepted") {
  const SceneManifest m = fixture::textured_manifest(three_assets());
  RefineOutcome outcome;
  const SceneManifest out = refine_loop(m, brief_of(m), refine_cfg(3), &outcome);
  CHECK(out.refine_round == 1);
  CHECK(outcome.reports.size() == 1);
  CHECK(texture_hashes(out) == texture_hashes(m));
}

TEST_CASE("refine_loop: an unreachable critic degrades to a warning") {
  const SceneManifest m = fixture::textured_manifest(fixture::plan_of({placed_box("a", 4, 4, {0, 0, 2})}));
  RefineConfig cfg = refine_cfg(2);
  cfg.critic.mock = false;
  cfg.critic.endpoint.url = mock::dead_url();
  cfg.critic.endpoint.retries = 0;
  RefineOutcome outcome;
  const SceneManifest out = refine_loop(m, brief_of(m), cfg, &outcome);
  CHECK(outcome.warnings.size() == 1);
  CHECK(texture_hashes(out) == texture_hashes(m));
  CHECK(out.refine_round == 0);
}

TEST_CASE("render_scene places assets at their translations") {
  const SceneManifest m = fixture::textured_manifest(fixture::plan_of({placed_box("a", 2, 2, {30, 0, 1})}, 1.0));
  CameraView v;
  v.eye = Vec3(30, 0, 20);
  v.target = Vec3(30, 0, 0);
  v.up = Vec3::UnitY();
  v.width = v.height = 64;
  const FrameBuffer fb = render_scene(m, v);
  CHECK(std::abs(fb.depth[32 * 64 + 32] - 18.0f) <= 1e-3f);
  CHECK(fb.semantic[32 * 64 + 32] == static_cast<std::uint8_t>(AssetCategory::Buildings));
}

TEST_CASE("asset_file_stem replaces separators") {
  CHECK(asset_file_stem("way/100") == "way_100");
  CHECK(asset_file_stem("plain") == "plain");
}
