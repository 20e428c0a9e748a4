#pragma once

#include <vector>

#include "urbanforge/core.hpp"
#include "urbanforge/mesh.hpp"

namespace urbanforge {

struct CameraView {
  Vec3 eye = Vec3(0, 0, 5);
  Vec3 target = Vec3::Zero();
  Vec3 up = Vec3::UnitZ();
  double fov_y_deg = 50.0;
  double near = 0.1;
  double far = 100.0;
  int width = 512;
  int height = 512;

  /// Throws Error(Shape) unless 0 < near < far, 0 < fov_y < 180 and the resolution is positive.
  void validate() const;

  Vec3 forward() const { return (target - eye).normalized(); }
  Vec3 right() const;
  Vec3 true_up() const { return right().cross(forward()); }
  double focal_px() const;

  /// World point -> camera frame (x right, y up, z forward along the optical axis).
  Vec3 to_camera(const Vec3& p) const;
  /// Camera-frame point -> continuous pixel coordinates (row 0 at the top).
  Vec2 camera_to_pixel(const Vec3& c) const { return {width / 2.0 + focal_px() * c.x() / c.z(), height / 2.0 - focal_px() * c.y() / c.z()}; }

  struct Projection {
    Vec2 pixel;
    double depth;  // view-space z
  };
  Projection project(const Vec3& p) const {
    const Vec3 c = to_camera(p);
    return {camera_to_pixel(c), c.z()};
  }

  /// World-space ray direction through continuous pixel coordinates, scaled so its
  /// forward component is 1 (ray parameter t equals view-space depth).
  Vec3 ray_direction(double px, double py) const;
};

inline constexpr double kRigElevationDeg = 30.0;
inline constexpr double kRigDistanceFactor = 2.2;
inline constexpr double kRigFovDeg = 50.0;
inline constexpr int kRigResolution = 512;
inline constexpr int kDefaultViews = 4;

/// Radius of the origin-centered bounding sphere (max vertex norm).
double bounding_radius(const AssetMesh& mesh);

/// n cameras on a ring around the asset origin; throws DegenerateGeometry for an empty mesh.
std::vector<CameraView> make_camera_rig(const AssetMesh& mesh, int n_views);
std::vector<CameraView> make_camera_rig(double radius, int n_views);

}  // namespace urbanforge
