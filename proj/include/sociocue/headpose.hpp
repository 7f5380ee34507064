#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>

#include "sociocue/camera.hpp"
#include "sociocue/face_model.hpp"

namespace sociocue {

struct BoundingBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool contains(const Eigen::Vector2d& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min &&
           p.y() <= y_max;
  }
  static BoundingBox around(std::span<const Eigen::Vector2d> pts,
                            double margin = 0.0);
};

// One detected face at one timestamp: the 68 2D landmarks in frame
// coordinates plus tracking metadata.
struct LandmarkObservation {
  int track_id = 0;
  std::int64_t timestamp_ms = 0;
  std::array<Eigen::Vector2d, landmarks::kCount> points;
  BoundingBox bbox;
};

// Throws ValidationError on non-finite points or a bbox that misses more
// than 8 of the 68 landmarks (contour overshoot is tolerated).
void validate(const LandmarkObservation& obs);

// Orientation and position of a face in the camera frame. Angles are
// degrees; yaw 0 means the face plane is parallel to the image plane.
struct HeadPose {
  double yaw_deg = 0;
  double pitch_deg = 0;
  double roll_deg = 0;
  Eigen::Vector3d translation_mm{0, 0, 0};
  double rms_reprojection_px = 0;
};

// Horizontal angle of a face from the optical axis, degrees, positive to
// the camera-wearer's right.
struct Bearing {
  double deg = 0;
};

enum class YawBin { FarLeft, Left, AtWearer, Right, FarRight };

const char* to_string(YawBin bin);

// Rotation convention, used identically by the solver and the simulator:
//   R_cam_from_face = RotY(yaw) * RotX(-pitch) * RotZ(roll) * R0
// with R0 = diag(1, -1, -1) mapping the face frame (x right, y up, z out of
// the face) onto the camera frame (x right, y down, z forward) for a face
// looking straight at the camera. Positive yaw turns the face toward the
// wearer's left; positive pitch tilts it toward the image top. A face at
// bearing beta looking at the camera has yaw == beta.
Eigen::Matrix3d rotation_from_ypr(double yaw_deg, double pitch_deg,
                                  double roll_deg);
void euler_from_rotation(const Eigen::Matrix3d& cam_from_face,
                         double& yaw_deg, double& pitch_deg,
                         double& roll_deg);

struct PoseSolverOptions {
  int max_iterations = 50;
  double step_tolerance = 1e-8;
  int stall_limit = 10;  // NoConvergence after this many non-decreasing steps
};

// Recovers the head pose from the interior landmarks (contour excluded) by
// aligning the 3D model with the undistorted observation rays: DLT-style
// linear initialization, then Gauss-Newton on the angular residuals.
HeadPose solve_pose(const LandmarkObservation& obs, const FaceModel3D& model,
                    const CameraIntrinsics& intr,
                    const PoseSolverOptions& opts = {});

// Horizontal angle of the undistorted ray through the nose-center landmark.
Bearing bearing_of(const LandmarkObservation& obs,
                   const CameraIntrinsics& intr);

struct YawBinBoundaries {
  double inner_deg = 22.5;
  double outer_deg = 67.5;
};

// Bins the relative yaw delta = yaw - bearing. Ties at the boundaries go to
// the bin nearer AtWearer.
YawBin classify_yaw(const HeadPose& pose, Bearing bearing,
                    const YawBinBoundaries& bounds = {});
YawBin classify_relative_yaw(double delta_deg,
                             const YawBinBoundaries& bounds = {});

}  // namespace sociocue
