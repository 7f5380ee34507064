#include "sociocue/camera.hpp"

#include <cmath>

#include "sociocue/errors.hpp"
#include "sociocue/math_util.hpp"

namespace sociocue {

namespace {
// Numerical slack so that points sitting exactly on the field edge
// round-trip instead of flapping between valid and OutOfField.
constexpr double kFieldEpsilonRad = 1e-9;
}  // namespace

double CameraIntrinsics::focal() const {
  return (width / 2.0) / half_fov_rad();
}

double CameraIntrinsics::half_fov_rad() const {
  return deg2rad(fov_h_deg) / 2.0;
}

Eigen::Vector3d undistort_point(const Eigen::Vector2d& px,
                                const CameraIntrinsics& intr) {
  const Eigen::Vector2d d = px - intr.principal_point();
  const double r = d.norm();
  const double theta = r / intr.focal();
  if (theta > intr.half_fov_rad() + kFieldEpsilonRad) {
    throw OutOfField("pixel at radius " + std::to_string(r) +
                     " px maps beyond the half field of view");
  }
  if (r == 0.0) return {0.0, 0.0, 1.0};
  const Eigen::Vector2d dir = d / r;
  const double s = std::sin(theta);
  return {s * dir.x(), s * dir.y(), std::cos(theta)};
}

std::vector<Eigen::Vector3d> undistort_points(
    std::span<const Eigen::Vector2d> pixels, const CameraIntrinsics& intr) {
  std::vector<Eigen::Vector3d> rays;
  rays.reserve(pixels.size());
  for (const auto& px : pixels) rays.push_back(undistort_point(px, intr));
  return rays;
}

Eigen::Vector2d project_ray(const Eigen::Vector3d& ray,
                            const CameraIntrinsics& intr) {
  const double lateral = std::hypot(ray.x(), ray.y());
  const double theta = std::atan2(lateral, ray.z());
  if (theta > intr.half_fov_rad() + kFieldEpsilonRad) {
    throw OutOfField("ray at " + std::to_string(rad2deg(theta)) +
                     " deg lies beyond the half field of view");
  }
  if (lateral == 0.0) return intr.principal_point();
  const double r = intr.focal() * theta;
  return intr.principal_point() + r * Eigen::Vector2d(ray.x(), ray.y()) / lateral;
}

}  // namespace sociocue
