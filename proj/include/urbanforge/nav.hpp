#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "urbanforge/assembly.hpp"
#include "urbanforge/camera.hpp"
#include "urbanforge/raster.hpp"

namespace urbanforge {

using WorldTriangle = std::array<Vec3, 3>;

struct OccupancyGrid {
  Vec3 origin = Vec3::Zero();
  double resolution = 1.0;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<std::uint8_t> occupied;

  OccupancyGrid() = default;
  OccupancyGrid(const Vec3& origin, double resolution, const Eigen::Vector3i& dims);

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims.y() + j) * dims.x() + i;
  }
  bool in_bounds(const Eigen::Vector3i& c) const {
    return (c.array() >= 0).all() && (c.array() < dims.array()).all();
  }
  Eigen::Vector3i cell_of(const Vec3& p) const;
  Box3 voxel_box(int i, int j, int k) const;
  Vec3 voxel_center(int i, int j, int k) const { return voxel_box(i, j, k).center(); }
  bool is_occupied(int i, int j, int k) const { return occupied[index(i, j, k)] != 0; }
  void set_occupied(int i, int j, int k, bool v = true) { occupied[index(i, j, k)] = v ? 1 : 0; }
  /// Inside the grid and in a free voxel.
  bool is_free(const Vec3& p) const;
  std::size_t occupied_count() const;
  Box3 extent() const { return {origin, origin + resolution * dims.cast<double>()}; }
};

/// Triangle vs axis-aligned box. True when the triangle meets the open box, or when it lies in
/// one of the box's face planes overlapping it with positive area and the box is behind the
/// triangle (opposite its normal). A surface on a voxel boundary thus belongs to one voxel.
bool triangle_occupies_box(const WorldTriangle& tri, const Box3& box);

/// Grid over `bounds` padded by one voxel per side.
OccupancyGrid voxelize(std::span<const WorldTriangle> triangles, const Box3& bounds, double resolution);
OccupancyGrid voxelize(const SceneManifest& manifest, double resolution);
std::vector<WorldTriangle> world_triangles(const SceneManifest& manifest);

struct AgentPose {
  Vec3 position = Vec3::Zero();
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
};

struct Intrinsics {
  int width = 256;
  int height = 256;
  double fov_y_deg = 60.0;
  double near = 0.1;
  double far = 2000.0;
};

/// Camera at the pose: yaw about +Z from +X, pitch up from the horizon. Throws Config for
/// pitch outside [-89, 89].
CameraView pose_camera(const AgentPose& pose, const Intrinsics& intr);

struct Observation {
  AgentPose pose;
  FrameBuffer frame;
};

Observation observe(const SceneManifest& manifest, const AgentPose& pose, const Intrinsics& intr);

struct RrtParams {
  /// 0 selects 2 x grid resolution.
  double step_m = 0.0;
  double goal_bias = 0.1;
  int max_iters = 10000;
  /// 0 selects 2 x grid resolution.
  double goal_tol = 0.0;
  std::uint64_t seed = 0;
};

struct NavPlan {
  std::vector<Vec3> waypoints;
  bool found = false;
  int iterations_used = 0;
  std::uint64_t rng_seed = 0;
};

/// True when every sample at resolution/2 spacing along [a, b] (endpoints included) is free.
bool segment_free(const OccupancyGrid& grid, const Vec3& a, const Vec3& b);

/// Greedy shortcutting: from each kept waypoint, jump to the farthest later waypoint reachable
/// by a free segment. Endpoints are kept.
std::vector<Vec3> shortcut_path(const OccupancyGrid& grid, std::span<const Vec3> path);

/// RRT with goal bias over uniformly sampled free space, followed by greedy shortcutting.
/// Returns found = false when the iteration budget runs out. Throws InvalidEndpoint for an
/// occupied or out-of-grid start or goal.
NavPlan search_rrt(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, const RrtParams& params);
/// As search_rrt, but throws NoPathFound when no path is found.
NavPlan plan_rrt(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, const RrtParams& params);

double path_length(std::span<const Vec3> waypoints);

/// Poses every stride_m of arc length from the first waypoint, plus the final waypoint, with
/// yaw along the current segment. Throws InvalidPlan for a plan that was not found.
std::vector<AgentPose> trajectory_poses(const NavPlan& plan, double stride_m);
std::vector<Observation> record_trajectory(const SceneManifest& manifest, const NavPlan& plan, double stride_m,
                                           const Intrinsics& intr);

/// Writes frame_NNNN_{rgb,depth,semantic}.png (depth as 16-bit millimeters, 0 = background)
/// and poses.json.
void export_trajectory(std::span<const Observation> observations, const std::filesystem::path& dir);

}  // namespace urbanforge
