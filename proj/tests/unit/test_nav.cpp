#include <doctest.h>

#include <map>
#include <random>

#include "urbanforge/error.hpp"
#include "urbanforge/nav.hpp"

#include "support/fixtures.hpp"
#include "support/nav_checks.hpp"
#include "support/oracles.hpp"

using namespace urbanforge;
namespace fs = std::filesystem;

namespace {

std::vector<WorldTriangle> triangles_of(const AssetMesh& m) {
  std::vector<WorldTriangle> out;
  for (const auto& f : m.faces) out.push_back({m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]});
  return out;
}

// Occupancy by testing every triangle against every voxel.
std::vector<std::uint8_t> brute_voxels(const OccupancyGrid& g, const std::vector<WorldTriangle>& tris) {
  std::vector<std::uint8_t> occ(g.occupied.size(), 0);
  for (int k = 0; k < g.dims.z(); ++k)
    for (int j = 0; j < g.dims.y(); ++j)
      for (int i = 0; i < g.dims.x(); ++i)
        for (const auto& t : tris)
          if (oracle::triangle_owns_box(t, g.voxel_box(i, j, k))) occ[g.index(i, j, k)] = 1;
  return occ;
}

const SceneManifest& tower_scene() {
  static const SceneManifest m = [] {
    AssetMesh b = fixture::building_box(20, 30, "tower");
    b.center_world = Vec3(0, 0, 15);
    return fixture::textured_manifest(fixture::plan_of({b}, 50.0), 64);
  }();
  return m;
}

std::uint8_t modal(const std::vector<std::uint8_t>& v) {
  std::map<std::uint8_t, int> c;
  for (auto x : v) ++c[x];
  return std::max_element(c.begin(), c.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
}

NavPlan found(std::vector<Vec3> w) {
  NavPlan p;
  p.waypoints = std::move(w);
  p.found = true;
  return p;
}

Intrinsics small() {
  Intrinsics in;
  in.width = in.height = 64;
  return in;
}

}  // namespace

TEST_CASE("voxelize: unit cube at resolution 0.5 fills the eight voxels inside its shell") {
  const auto tris = triangles_of(fixture::box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}));
  const Box3 bounds{Vec3::Constant(-0.5), Vec3::Constant(0.5)};
  const OccupancyGrid g = voxelize(tris, bounds, 0.5);
  CHECK(g.dims == Eigen::Vector3i(4, 4, 4));
  CHECK((g.origin - Vec3::Constant(-1.0)).norm() < 1e-12);
  CHECK(g.occupied_count() == 8);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        const bool inner = i >= 1 && i <= 2 && j >= 1 && j <= 2 && k >= 1 && k <= 2;
        CHECK(g.is_occupied(i, j, k) == inner);
      }
  CHECK(g.occupied == brute_voxels(g, tris));
}

TEST_CASE("voxelize agrees with exhaustive triangle-box tests") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  std::uniform_int_distribution<int> grid_pt(0, 6);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<WorldTriangle> tris;
    for (int t = 0; t < 4; ++t) tris.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))});
    // Axis-aligned triangles on voxel boundaries exercise the face-ownership rule.
    const double z = grid_pt(rng);
    tris.push_back({Vec3(grid_pt(rng), grid_pt(rng), z), Vec3(grid_pt(rng), grid_pt(rng), z), Vec3(grid_pt(rng), grid_pt(rng), z)});
    const double x = grid_pt(rng);
    tris.push_back({Vec3(x, 0, 0), Vec3(x, 6, 0), Vec3(x, 0, 6)});
    const OccupancyGrid g = voxelize(tris, Box3{Vec3::Zero(), Vec3::Constant(6)}, 1.0);
    CHECK(g.occupied == brute_voxels(g, tris));
  }
}

TEST_CASE("voxelize: empty scene is all free") {
  const OccupancyGrid g = voxelize(std::vector<WorldTriangle>{}, Box3{Vec3::Zero(), Vec3::Constant(4)}, 1.0);
  CHECK(g.occupied_count() == 0);
  CHECK(g.dims == Eigen::Vector3i(6, 6, 6));
  CHECK_THROWS_AS(voxelize(std::vector<WorldTriangle>{}, Box3{Vec3::Zero(), Vec3::Ones()}, 0.0), Error);
}

TEST_CASE("voxelize: coarse occupancy lies within the dilated fine occupancy") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<WorldTriangle> tris;
    for (int t = 0; t < 6; ++t) tris.push_back({Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))});
    tris.push_back({Vec3(0, 0, 4), Vec3(8, 0, 4), Vec3(8, 8, 4)});
    const Box3 bounds{Vec3::Zero(), Vec3::Constant(8)};
    const OccupancyGrid coarse = voxelize(tris, bounds, 1.0), fine = voxelize(tris, bounds, 0.5);
    for (int k = 0; k < coarse.dims.z(); ++k)
      for (int j = 0; j < coarse.dims.y(); ++j)
        for (int i = 0; i < coarse.dims.x(); ++i) {
          if (!coarse.is_occupied(i, j, k)) continue;
          Box3 grown = coarse.voxel_box(i, j, k);
          grown.min -= Vec3::Constant(0.5 + 1e-9);
          grown.max += Vec3::Constant(0.5 + 1e-9);
          bool covered = false;
          for (int c = 0; c < fine.dims.z() && !covered; ++c)
            for (int b = 0; b < fine.dims.y() && !covered; ++b)
              for (int a = 0; a < fine.dims.x() && !covered; ++a) {
                if (!fine.is_occupied(a, b, c)) continue;
                const Box3 f = fine.voxel_box(a, b, c);
                covered = (f.min.array() >= grown.min.array()).all() && (f.max.array() <= grown.max.array()).all();
              }
          CHECK(covered);
        }
  }
}

TEST_CASE("voxelize(manifest) covers the scene and blocks the building walls") {
  const OccupancyGrid g = voxelize(tower_scene(), 2.0);
  CHECK((g.extent().min.array() <= tower_scene().bounds.min.array()).all());
  CHECK((g.extent().max.array() >= tower_scene().bounds.max.array()).all());
  CHECK_FALSE(g.is_free(Vec3(-10, 0, 10)));
  CHECK(g.is_free(Vec3(-30, 0, 10)));
}

TEST_CASE("observe: facing a building fills the view with its category") {
  AgentPose pose;
  pose.position = Vec3(-14, 0, 12);
  const Observation o = observe(tower_scene(), pose, small());
  CHECK(modal(o.frame.semantic) == static_cast<std::uint8_t>(AssetCategory::Buildings));
}

TEST_CASE("observe: looking down from above shows mostly ground") {
  AgentPose pose;
  pose.position = Vec3(0, 0, 100);
  pose.pitch_deg = -89;
  const Observation o = observe(tower_scene(), pose, small());
  CHECK(modal(o.frame.semantic) == static_cast<std::uint8_t>(AssetCategory::Ground));
}

TEST_CASE("observe: opposite yaws differ, repeated calls do not") {
  AgentPose a;
  a.position = Vec3(-40, 0, 5);
  AgentPose b = a;
  b.yaw_deg = 180;
  const Observation oa = observe(tower_scene(), a, small()), ob = observe(tower_scene(), b, small());
  CHECK(oa.frame.rgb != ob.frame.rgb);
  CHECK(observe(tower_scene(), a, small()).frame.rgb == oa.frame.rgb);
  CHECK(observe(tower_scene(), a, small()).frame.depth == oa.frame.depth);
}

TEST_CASE("pose_camera rejects pitch outside the allowed range") {
  AgentPose p;
  p.pitch_deg = 90;
  CHECK_THROWS_AS(pose_camera(p, Intrinsics{}), Error);
}

TEST_CASE("plan_rrt: open space") {
  const OccupancyGrid g = voxelize(std::vector<WorldTriangle>{}, Box3{Vec3(-2, -4, -2), Vec3(12, 4, 4)}, 1.0);
  const Vec3 start(0, 0, 1), goal(10, 0, 1);
  RrtParams p;
  p.seed = 5;
  const NavPlan plan = plan_rrt(g, start, goal, p);
  CHECK(plan.found);
  CHECK(plan.waypoints.front() == start);
  CHECK((plan.waypoints.back() - goal).norm() <= 2 * g.resolution);
  CHECK(checks::path_free(g, plan.waypoints));
  CHECK(plan.rng_seed == 5);
  CHECK(plan_rrt(g, start, goal, p).waypoints == plan.waypoints);
}

TEST_CASE("plan_rrt: a separating wall means no path") {
  OccupancyGrid g(Vec3::Zero(), 1.0, Eigen::Vector3i(12, 6, 6));
  for (int k = 0; k < 6; ++k)
    for (int j = 0; j < 6; ++j) g.set_occupied(6, j, k);
  RrtParams p;
  p.max_iters = 500;
  try {
    plan_rrt(g, Vec3(1.5, 3, 3), Vec3(10.5, 3, 3), p);
    FAIL("expected NoPathFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPathFound);
    CHECK(std::string(e.what()).find("500") != std::string::npos);
  }
  const NavPlan soft = search_rrt(g, Vec3(1.5, 3, 3), Vec3(10.5, 3, 3), p);
  CHECK_FALSE(soft.found);
  CHECK(soft.iterations_used == 500);
}

TEST_CASE("plan_rrt: occupied or outside endpoints are invalid") {
  OccupancyGrid g(Vec3::Zero(), 1.0, Eigen::Vector3i(4, 4, 4));
  g.set_occupied(0, 0, 0);
  for (const Vec3& bad : {Vec3(0.5, 0.5, 0.5), Vec3(-1, 2, 2)}) {
    try {
      plan_rrt(g, bad, Vec3(3.5, 3.5, 3.5), RrtParams{});
      FAIL("expected InvalidEndpoint");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidEndpoint);
    }
    CHECK_THROWS_AS(plan_rrt(g, Vec3(3.5, 3.5, 3.5), bad, RrtParams{}), Error);
  }
}

TEST_CASE("plan_rrt: cluttered open and walled corridors give collision-free plans") {
  int open = 0, walled = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = checks::corridor_trial(32, 0.1, seed);
    open += t.found;
    if (t.found) CHECK(t.sound);
    const auto w = checks::corridor_trial(32, 0.1, seed, 8);
    walled += w.found;
    if (w.found) CHECK(w.sound);
  }
  CHECK(open >= 9);
  CHECK(walled >= 9);
}

TEST_CASE("shortcut_path keeps endpoints, never lengthens and never collides") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> step(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const OccupancyGrid g = checks::corridor_grid(16, 0.15, trial);
    std::vector<Vec3> path{Vec3(0.5, 8.5, 8.5)};
    while (path.size() < 40) {
      const Vec3 next = path.back() + Vec3(step(rng), step(rng), step(rng));
      if (segment_free(g, path.back(), next)) path.push_back(next);
    }
    REQUIRE(checks::path_free(g, path));
    const auto cut = shortcut_path(g, path);
    CHECK(cut.front() == path.front());
    CHECK(cut.back() == path.back());
    CHECK(path_length(cut) <= path_length(path) + 1e-9);
    CHECK(checks::path_free(g, cut));
  }
}

TEST_CASE("trajectory_poses: stride arithmetic and yaw") {
  CHECK(trajectory_poses(found({{0, 0, 1}, {10, 0, 1}}), 2.0).size() == 6);
  CHECK(trajectory_poses(found({{0, 0, 1}, {10, 0, 1}}), 20.0).size() == 2);
  CHECK(trajectory_poses(found({{0, 0, 1}, {10, 0, 1}}), 3.0).size() == 5);
  const auto poses = trajectory_poses(found({{0, 0, 1}, {4, 0, 1}, {4, 4, 1}}), 1.0);
  REQUIRE(poses.size() == 9);
  for (const auto& p : poses) {
    const double expect = p.position.x() < 4 - 1e-9 ? 0.0 : 90.0;
    if (p.position.y() > 1e-9 || p.position.x() < 4 - 1e-9) CHECK(p.yaw_deg == doctest::Approx(expect));
  }
  CHECK(poses.back().position == Vec3(4, 4, 1));
  CHECK(poses.back().yaw_deg == doctest::Approx(std::atan2(4, 0) * 180 / M_PI));
  try {
    trajectory_poses(NavPlan{}, 1.0);
    FAIL("expected InvalidPlan");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidPlan);
  }
}

TEST_CASE("record_trajectory and export_trajectory") {
  const NavPlan plan = found({{-40, -5, 3}, {-40, 5, 3}});
  const auto obs = record_trajectory(tower_scene(), plan, 5.0, small());
  REQUIRE(obs.size() == 3);
  const fs::path dir = fixture::scratch("trajectory");
  export_trajectory(obs, dir);
  for (int k = 0; k < 3; ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "frame_%04d_", k);
    for (const char* kind : {"rgb", "depth", "semantic"}) CHECK(fs::exists(dir / (std::string(stem) + kind + ".png")));
  }
  CHECK(fs::exists(dir / "poses.json"));
}
