#include "urbanforge/nav.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "urbanforge/error.hpp"
#include "urbanforge/image_io.hpp"

namespace urbanforge {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double tolerance_for(const WorldTriangle& tri, const Box3& box) {
  double scale = 1.0;
  for (const auto& v : tri) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  scale = std::max({scale, box.min.cwiseAbs().maxCoeff(), box.max.cwiseAbs().maxCoeff()});
  return 1e-9 * scale;
}

// Projections overlap with positive length on every axis.
bool interiors_meet(const WorldTriangle& tri, const Box3& box, double eps) {
  const Vec3 c = box.center();
  const Vec3 h = 0.5 * box.extent();
  const std::array<Vec3, 3> e = {tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]};
  std::vector<Vec3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), e[0].cross(e[1])};
  for (const auto& edge : e) {
    for (int k = 0; k < 3; ++k) axes.push_back(edge.cross(Vec3::Unit(k)));
  }
  for (const auto& a : axes) {
    const double len = a.norm();
    if (len < 1e-12) continue;
    double tmin = INFINITY, tmax = -INFINITY;
    for (const auto& v : tri) {
      tmin = std::min(tmin, a.dot(v));
      tmax = std::max(tmax, a.dot(v));
    }
    const double r = h.dot(a.cwiseAbs());
    const double mid = a.dot(c);
    if (tmax <= mid - r + eps * len || tmin >= mid + r - eps * len) return false;
  }
  return true;
}

// Strict overlap of a 2D triangle with an open rectangle.
bool triangle_rect_overlap(const std::array<Vec2, 3>& t, const Vec2& lo, const Vec2& hi, double eps) {
  std::vector<Vec2> axes = {Vec2::UnitX(), Vec2::UnitY()};
  for (int k = 0; k < 3; ++k) {
    const Vec2 d = t[(k + 1) % 3] - t[k];
    axes.emplace_back(-d.y(), d.x());
  }
  const std::array<Vec2, 4> rect = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
  for (const auto& a : axes) {
    const double len = a.norm();
    if (len < 1e-12) continue;
    double tmin = INFINITY, tmax = -INFINITY, rmin = INFINITY, rmax = -INFINITY;
    for (const auto& p : t) {
      tmin = std::min(tmin, a.dot(p));
      tmax = std::max(tmax, a.dot(p));
    }
    for (const auto& p : rect) {
      rmin = std::min(rmin, a.dot(p));
      rmax = std::max(rmax, a.dot(p));
    }
    if (tmax <= rmin + eps * len || tmin >= rmax - eps * len) return false;
  }
  return true;
}

}  // namespace

OccupancyGrid::OccupancyGrid(const Vec3& o, double res, const Eigen::Vector3i& d)
    : origin(o), resolution(res), dims(d), occupied(static_cast<std::size_t>(d.x()) * d.y() * d.z(), 0) {
  if (!(res > 0)) throw Error(ErrorCode::Config, "voxel resolution must be positive");
}

Eigen::Vector3i OccupancyGrid::cell_of(const Vec3& p) const {
  const Vec3 q = (p - origin) / resolution;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())), static_cast<int>(std::floor(q.z()))};
}

Box3 OccupancyGrid::voxel_box(int i, int j, int k) const {
  const Vec3 lo = origin + resolution * Vec3(i, j, k);
  return {lo, lo + Vec3::Constant(resolution)};
}

bool OccupancyGrid::is_free(const Vec3& p) const {
  if (!p.allFinite()) return false;
  const Eigen::Vector3i c = cell_of(p);
  return in_bounds(c) && !is_occupied(c.x(), c.y(), c.z());
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

bool triangle_occupies_box(const WorldTriangle& tri, const Box3& box) {
  const double eps = tolerance_for(tri, box);
  if (interiors_meet(tri, box, eps)) return true;
  const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
  if (n.norm() < 1e-15) return false;
  const Vec3 un = n.normalized();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(un[a]) < 1 - 1e-9) continue;
    const double plane = tri[0][a];
    const double face = un[a] > 0 ? box.max[a] : box.min[a];
    if (std::abs(plane - face) > eps) return false;
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    const std::array<Vec2, 3> t2 = {Vec2(tri[0][u], tri[0][v]), Vec2(tri[1][u], tri[1][v]), Vec2(tri[2][u], tri[2][v])};
    return triangle_rect_overlap(t2, Vec2(box.min[u], box.min[v]), Vec2(box.max[u], box.max[v]), eps);
  }
  return false;
}

OccupancyGrid voxelize(std::span<const WorldTriangle> triangles, const Box3& bounds, double resolution) {
  if (!(resolution > 0)) throw Error(ErrorCode::Config, "voxel resolution must be positive");
  const Vec3 origin = bounds.min - Vec3::Constant(resolution);
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a)
    dims[a] = std::max(1, static_cast<int>(std::ceil(bounds.extent()[a] / resolution - 1e-9))) + 2;
  OccupancyGrid grid(origin, resolution, dims);
  for (const auto& tri : triangles) {
    Vec3 lo = tri[0], hi = tri[0];
    for (const auto& v : tri) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    Eigen::Vector3i c0 = grid.cell_of(lo) - Eigen::Vector3i::Ones();
    Eigen::Vector3i c1 = grid.cell_of(hi) + Eigen::Vector3i::Ones();
    c0 = c0.cwiseMax(Eigen::Vector3i::Zero());
    c1 = c1.cwiseMin(dims - Eigen::Vector3i::Ones());
    for (int k = c0.z(); k <= c1.z(); ++k)
      for (int j = c0.y(); j <= c1.y(); ++j)
        for (int i = c0.x(); i <= c1.x(); ++i)
          if (!grid.is_occupied(i, j, k) && triangle_occupies_box(tri, grid.voxel_box(i, j, k))) grid.set_occupied(i, j, k);
  }
  return grid;
}

std::vector<WorldTriangle> world_triangles(const SceneManifest& manifest) {
  std::vector<WorldTriangle> tris;
  for (const auto& e : manifest.entries) {
    for (const auto& f : e.mesh->faces)
      tris.push_back({e.mesh->vertices[f[0]] + e.translation, e.mesh->vertices[f[1]] + e.translation,
                      e.mesh->vertices[f[2]] + e.translation});
  }
  return tris;
}

OccupancyGrid voxelize(const SceneManifest& manifest, double resolution) {
  const auto tris = world_triangles(manifest);
  return voxelize(tris, manifest.entries.empty() ? Box3{} : manifest.bounds, resolution);
}

CameraView pose_camera(const AgentPose& pose, const Intrinsics& intr) {
  if (!(pose.pitch_deg >= -89.0 && pose.pitch_deg <= 89.0)) throw Error(ErrorCode::Config, "pitch must lie in [-89, 89] degrees");
  const double yaw = pose.yaw_deg * kDeg, pitch = pose.pitch_deg * kDeg;
  CameraView v;
  v.eye = pose.position;
  v.target = pose.position + Vec3(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch));
  v.up = Vec3::UnitZ();
  v.fov_y_deg = intr.fov_y_deg;
  v.near = intr.near;
  v.far = intr.far;
  v.width = intr.width;
  v.height = intr.height;
  v.validate();
  return v;
}

Observation observe(const SceneManifest& manifest, const AgentPose& pose, const Intrinsics& intr) {
  return {pose, render_scene(manifest, pose_camera(pose, intr), true)};
}

bool segment_free(const OccupancyGrid& grid, const Vec3& a, const Vec3& b) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid.resolution))));
  for (int k = 0; k <= n; ++k) {
    if (!grid.is_free(a + (b - a) * (static_cast<double>(k) / n))) return false;
  }
  return true;
}

double path_length(std::span<const Vec3> w) {
  double L = 0;
  for (std::size_t i = 1; i < w.size(); ++i) L += (w[i] - w[i - 1]).norm();
  return L;
}

NavPlan search_rrt(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, const RrtParams& params) {
  if (!grid.is_free(start)) throw Error(ErrorCode::InvalidEndpoint, "start is occupied or outside the grid");
  if (!grid.is_free(goal)) throw Error(ErrorCode::InvalidEndpoint, "goal is occupied or outside the grid");
  const double step = params.step_m > 0 ? params.step_m : 2 * grid.resolution;
  const double tol = params.goal_tol > 0 ? params.goal_tol : 2 * grid.resolution;

  NavPlan plan;
  plan.rng_seed = params.seed;
  std::vector<Vec3> nodes{start};
  std::vector<int> parent{-1};
  int reached = -1;
  if ((goal - start).norm() <= tol && segment_free(grid, start, goal)) reached = 0;

  std::vector<std::uint32_t> free_cells;
  for (std::size_t i = 0; i < grid.occupied.size(); ++i) {
    if (!grid.occupied[i]) free_cells.push_back(static_cast<std::uint32_t>(i));
  }
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);

  int iter = 0;
  while (reached < 0 && iter < params.max_iters) {
    ++iter;
    Vec3 sample;
    if (unit(rng) < params.goal_bias) {
      sample = goal;
    } else {
      const std::uint32_t cell = free_cells[pick(rng)];
      const int i = static_cast<int>(cell % grid.dims.x());
      const int j = static_cast<int>((cell / grid.dims.x()) % grid.dims.y());
      const int k = static_cast<int>(cell / (static_cast<std::size_t>(grid.dims.x()) * grid.dims.y()));
      sample = grid.voxel_box(i, j, k).min + grid.resolution * Vec3(unit(rng), unit(rng), unit(rng));
    }
    std::size_t nearest = 0;
    double best = INFINITY;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const double d = (nodes[n] - sample).squaredNorm();
      if (d < best) {
        best = d;
        nearest = n;
      }
    }
    const Vec3 from = nodes[nearest];
    const double dist = std::sqrt(best);
    if (dist < 1e-12) continue;
    const Vec3 to = dist <= step ? sample : Vec3(from + (sample - from) * (step / dist));
    if (!segment_free(grid, from, to)) continue;
    nodes.push_back(to);
    parent.push_back(static_cast<int>(nearest));
    if ((goal - to).norm() <= tol && segment_free(grid, to, goal)) reached = static_cast<int>(nodes.size()) - 1;
  }
  plan.iterations_used = iter;
  if (reached < 0) return plan;

  std::vector<Vec3> path;
  for (int n = reached; n >= 0; n = parent[n]) path.push_back(nodes[n]);
  std::reverse(path.begin(), path.end());
  if ((path.back() - goal).norm() > 0) path.push_back(goal);

  plan.waypoints = shortcut_path(grid, path);
  plan.found = true;
  return plan;
}

std::vector<Vec3> shortcut_path(const OccupancyGrid& grid, std::span<const Vec3> path) {
  if (path.empty()) return {};
  std::vector<Vec3> out{path.front()};
  for (std::size_t i = 0; i + 1 < path.size();) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !segment_free(grid, path[i], path[j])) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

NavPlan plan_rrt(const OccupancyGrid& grid, const Vec3& start, const Vec3& goal, const RrtParams& params) {
  NavPlan plan = search_rrt(grid, start, goal, params);
  if (!plan.found)
    throw Error(ErrorCode::NoPathFound, "no path after " + std::to_string(plan.iterations_used) + " iterations");
  return plan;
}

std::vector<AgentPose> trajectory_poses(const NavPlan& plan, double stride_m) {
  if (!plan.found || plan.waypoints.empty()) throw Error(ErrorCode::InvalidPlan, "trajectory needs a found plan");
  if (!(stride_m > 0)) throw Error(ErrorCode::Config, "stride must be positive");
  const auto& w = plan.waypoints;
  auto yaw_of = [&](std::size_t seg) {
    const Vec3 d = w[seg + 1] - w[seg];
    return std::atan2(d.y(), d.x()) / kDeg;
  };
  std::vector<AgentPose> poses;
  if (w.size() == 1) {
    poses.push_back({w[0], 0.0, 0.0});
    return poses;
  }
  const double L = path_length(w);
  const auto count = static_cast<std::size_t>(std::floor(L / stride_m + 1e-9)) + 1;
  std::size_t seg = 0;
  double seg_start = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = std::min(k * stride_m, L);
    while (seg + 2 < w.size() && s > seg_start + (w[seg + 1] - w[seg]).norm()) {
      seg_start += (w[seg + 1] - w[seg]).norm();
      ++seg;
    }
    const double seg_len = (w[seg + 1] - w[seg]).norm();
    const double t = seg_len > 0 ? std::clamp((s - seg_start) / seg_len, 0.0, 1.0) : 0.0;
    poses.push_back({w[seg] + t * (w[seg + 1] - w[seg]), yaw_of(seg), 0.0});
  }
  if (L - (count - 1) * stride_m > 1e-9 * std::max(1.0, L)) poses.push_back({w.back(), yaw_of(w.size() - 2), 0.0});
  return poses;
}

std::vector<Observation> record_trajectory(const SceneManifest& manifest, const NavPlan& plan, double stride_m,
                                           const Intrinsics& intr) {
  std::vector<Observation> obs;
  for (const auto& pose : trajectory_poses(plan, stride_m)) obs.push_back(observe(manifest, pose, intr));
  return obs;
}

void export_trajectory(std::span<const Observation> observations, const fs::path& dir) {
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::Io, e.what());
  }
  nlohmann::json poses = nlohmann::json::array();
  for (std::size_t n = 0; n < observations.size(); ++n) {
    const auto& o = observations[n];
    char stem[32];
    std::snprintf(stem, sizeof(stem), "frame_%04zu", n);
    const FrameBuffer& fb = o.frame;
    Image<std::uint16_t> depth(fb.width, fb.height, 1);
    GrayImage sem(fb.width, fb.height, 1);
    for (std::size_t i = 0; i < fb.depth.size(); ++i) {
      depth.data[i] = std::isfinite(fb.depth[i])
                          ? static_cast<std::uint16_t>(std::clamp(std::lround(fb.depth[i] * 1000.0), 1L, 65535L))
                          : 0;
      sem.data[i] = fb.semantic[i];
    }
    write_png(dir / (std::string(stem) + "_rgb.png"), fb.rgb);
    write_file(dir / (std::string(stem) + "_depth.png"), encode_png16(depth));
    write_png(dir / (std::string(stem) + "_semantic.png"), sem);
    poses.push_back({{"frame", stem},
                     {"position", {o.pose.position.x(), o.pose.position.y(), o.pose.position.z()}},
                     {"yaw_deg", o.pose.yaw_deg},
                     {"pitch_deg", o.pose.pitch_deg}});
  }
  write_text_file(dir / "poses.json", nlohmann::json{{"depth_unit", "mm"}, {"poses", poses}}.dump(2) + "\n");
}

}  // namespace urbanforge
