#include "urbanforge/camera.hpp"

#include <cmath>
#include <numbers>

#include "urbanforge/error.hpp"

namespace urbanforge {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

void CameraView::validate() const {
  if (!(near > 0) || !(far > near)) throw Error(ErrorCode::Shape, "camera requires 0 < near < far");
  if (!(fov_y_deg > 0 && fov_y_deg < 180)) throw Error(ErrorCode::Shape, "camera fov_y must be in (0, 180)");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Shape, "camera resolution must be positive");
  if ((target - eye).norm() == 0) throw Error(ErrorCode::Shape, "camera eye equals target");
}

Vec3 CameraView::right() const {
  const Vec3 f = forward();
  Vec3 r = f.cross(up);
  if (r.norm() < 1e-9) r = f.cross(std::abs(f.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitY());
  return r.normalized();
}

double CameraView::focal_px() const { return (height / 2.0) / std::tan(fov_y_deg * kDeg / 2); }

Vec3 CameraView::to_camera(const Vec3& p) const {
  const Vec3 d = p - eye;
  const Vec3 f = forward();
  const Vec3 r = right();
  const Vec3 u = r.cross(f);
  return {d.dot(r), d.dot(u), d.dot(f)};
}

Vec3 CameraView::ray_direction(double px, double py) const {
  const double f = focal_px();
  const double xc = (px - width / 2.0) / f;
  const double yc = (height / 2.0 - py) / f;
  const Vec3 fw = forward();
  const Vec3 r = right();
  return fw + xc * r + yc * r.cross(fw);
}

double bounding_radius(const AssetMesh& mesh) {
  double r = 0;
  for (const auto& v : mesh.vertices) r = std::max(r, v.norm());
  return r;
}

std::vector<CameraView> make_camera_rig(double radius, int n_views) {
  if (n_views < 1) throw Error(ErrorCode::Config, "n_views must be >= 1");
  if (!(radius > 0)) throw Error(ErrorCode::DegenerateGeometry, "camera rig needs a mesh with positive extent");
  const double dist = kRigDistanceFactor * radius;
  const double el = kRigElevationDeg * kDeg;
  std::vector<CameraView> rig;
  rig.reserve(n_views);
  for (int k = 0; k < n_views; ++k) {
    const double az = 2.0 * std::numbers::pi * k / n_views;
    CameraView v;
    v.target = Vec3::Zero();
    v.eye = dist * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    v.up = Vec3::UnitZ();
    v.fov_y_deg = kRigFovDeg;
    v.near = 0.1 * dist;
    v.far = 3.0 * dist;
    v.width = v.height = kRigResolution;
    rig.push_back(v);
  }
  return rig;
}

std::vector<CameraView> make_camera_rig(const AssetMesh& mesh, int n_views) {
  if (mesh.empty()) throw Error(ErrorCode::DegenerateGeometry, mesh.id + ": empty mesh");
  return make_camera_rig(bounding_radius(mesh), n_views);
}

}  // namespace urbanforge
