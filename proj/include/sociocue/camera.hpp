#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace sociocue {

// Equidistant-fisheye camera. A ray at angle theta from the optical axis
// lands at radius r = f * theta from the principal point, with
// f = (width/2) / (fov_h/2 in radians). The camera frame is x right,
// y down (image convention), z forward along the optical axis.
struct CameraIntrinsics {
  int width = 640;
  int height = 480;
  double fov_h_deg = 170.0;

  double focal() const;  // pixels per radian
  double half_fov_rad() const;
  Eigen::Vector2d principal_point() const {
    return {width / 2.0, height / 2.0};
  }
  bool contains(const Eigen::Vector2d& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 &&
           px.y() < height;
  }
};

// Inverts the equidistant mapping for one pixel. Returns a unit ray in the
// camera frame. Throws OutOfField when the pixel lies beyond the half field.
Eigen::Vector3d undistort_point(const Eigen::Vector2d& px,
                                const CameraIntrinsics& intr);

std::vector<Eigen::Vector3d> undistort_points(
    std::span<const Eigen::Vector2d> pixels, const CameraIntrinsics& intr);

// Forward equidistant projection of a camera-frame direction (need not be
// normalized). Throws OutOfField beyond the half field.
Eigen::Vector2d project_ray(const Eigen::Vector3d& ray,
                            const CameraIntrinsics& intr);

}  // namespace sociocue
