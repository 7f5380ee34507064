#include "sociocue/headpose.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <vector>

#include "sociocue/errors.hpp"
#include "sociocue/math_util.hpp"

namespace sociocue {

namespace {

Eigen::Matrix3d rot_x(double rad) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(rad), -std::sin(rad), 0, std::sin(rad),
      std::cos(rad);
  return m;
}

Eigen::Matrix3d rot_y(double rad) {
  Eigen::Matrix3d m;
  m << std::cos(rad), 0, std::sin(rad), 0, 1, 0, -std::sin(rad), 0,
      std::cos(rad);
  return m;
}

Eigen::Matrix3d rot_z(double rad) {
  Eigen::Matrix3d m;
  m << std::cos(rad), -std::sin(rad), 0, std::sin(rad), std::cos(rad), 0, 0,
      0, 1;
  return m;
}

Eigen::Matrix3d base_orientation() {
  return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  const Eigen::Vector3d axis = w / theta;
  const Eigen::Matrix3d k = skew(axis);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * k +
         (1.0 - std::cos(theta)) * k * k;
}

struct Correspondences {
  std::vector<Eigen::Vector3d> model;  // face-frame points, mm
  std::vector<Eigen::Vector3d> rays;   // observed unit rays
  std::vector<Eigen::Vector2d> pixels; // original landmark pixels
};

Correspondences gather_interior(const LandmarkObservation& obs,
                                const FaceModel3D& model,
                                const CameraIntrinsics& intr) {
  Correspondences c;
  c.model.reserve(landmarks::kInteriorCount);
  c.rays.reserve(landmarks::kInteriorCount);
  c.pixels.reserve(landmarks::kInteriorCount);
  for (int i = landmarks::kInteriorBegin; i < landmarks::kCount; ++i) {
    c.model.push_back(model.point(i));
    c.rays.push_back(undistort_point(obs.points[i], intr));
    c.pixels.push_back(obs.points[i]);
  }
  return c;
}

// Linear initialization: u x (A*X + b) = 0 gives three equations (rank two)
// per correspondence in the twelve entries of [A|b]; the smallest singular
// vector yields A up to scale, which is then projected onto a rotation.
void dlt_initialize(const Correspondences& c, Eigen::Matrix3d& rotation,
                    Eigen::Vector3d& translation) {
  const int n = static_cast<int>(c.model.size());
  Eigen::MatrixXd sys(3 * n, 12);
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix3d ux = skew(c.rays[i]);
    const Eigen::Vector3d& x = c.model[i];
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) {
        sys(3 * i + r, 4 * col + 0) = ux(r, col) * x.x();
        sys(3 * i + r, 4 * col + 1) = ux(r, col) * x.y();
        sys(3 * i + r, 4 * col + 2) = ux(r, col) * x.z();
        sys(3 * i + r, 4 * col + 3) = ux(r, col);
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 2) < 1e-10 * sv(0)) {
    throw DegenerateConfiguration(
        "landmark configuration leaves the pose underdetermined");
  }
  Eigen::VectorXd p = svd.matrixV().col(11);

  Eigen::Matrix3d a;
  Eigen::Vector3d b;
  for (int r = 0; r < 3; ++r) {
    a.row(r) << p(4 * r + 0), p(4 * r + 1), p(4 * r + 2);
    b(r) = p(4 * r + 3);
  }
  // The null vector is determined up to global sign; faces sit in front of
  // the camera, so flip if the points land behind the observed rays.
  double facing = 0;
  for (std::size_t i = 0; i < c.model.size(); ++i) {
    facing += c.rays[i].dot(a * c.model[i] + b);
  }
  if (facing < 0) {
    a = -a;
    b = -b;
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> asvd(
      a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double scale = asvd.singularValues().mean();
  if (scale < 1e-12) {
    throw DegenerateConfiguration("linear pose initialization collapsed");
  }
  const double det =
      (asvd.matrixU() * asvd.matrixV().transpose()).determinant();
  rotation = asvd.matrixU() *
             Eigen::Matrix3d(
                 Eigen::Vector3d(1.0, 1.0, det < 0 ? -1.0 : 1.0).asDiagonal()) *
             asvd.matrixV().transpose();
  translation = b / scale;
}

double angular_rms(const Correspondences& c, const Eigen::Matrix3d& r,
                   const Eigen::Vector3d& t) {
  double sum = 0;
  for (std::size_t i = 0; i < c.model.size(); ++i) {
    const Eigen::Vector3d v = (r * c.model[i] + t).normalized();
    sum += (v - c.rays[i].dot(v) * c.rays[i]).squaredNorm();
  }
  return std::sqrt(sum / c.model.size());
}

double pixel_rms(const Correspondences& c, const Eigen::Matrix3d& r,
                 const Eigen::Vector3d& t, const CameraIntrinsics& intr) {
  double sum = 0;
  for (std::size_t i = 0; i < c.model.size(); ++i) {
    const Eigen::Vector2d reproj = project_ray(r * c.model[i] + t, intr);
    sum += (reproj - c.pixels[i]).squaredNorm();
  }
  return std::sqrt(sum / c.model.size());
}

}  // namespace

BoundingBox BoundingBox::around(std::span<const Eigen::Vector2d> pts,
                                double margin) {
  BoundingBox b{std::numeric_limits<double>::max(),
                std::numeric_limits<double>::max(),
                std::numeric_limits<double>::lowest(),
                std::numeric_limits<double>::lowest()};
  for (const auto& p : pts) {
    b.x_min = std::min(b.x_min, p.x());
    b.y_min = std::min(b.y_min, p.y());
    b.x_max = std::max(b.x_max, p.x());
    b.y_max = std::max(b.y_max, p.y());
  }
  b.x_min -= margin;
  b.y_min -= margin;
  b.x_max += margin;
  b.y_max += margin;
  return b;
}

void validate(const LandmarkObservation& obs) {
  int inside = 0;
  for (const auto& p : obs.points) {
    if (!p.allFinite()) {
      throw ValidationError("landmark observation contains non-finite point");
    }
    if (obs.bbox.contains(p)) ++inside;
  }
  if (inside < 60) {
    throw ValidationError(
        "bounding box misses more than 8 of the 68 landmarks");
  }
}

const char* to_string(YawBin bin) {
  switch (bin) {
    case YawBin::FarLeft: return "FarLeft";
    case YawBin::Left: return "Left";
    case YawBin::AtWearer: return "AtWearer";
    case YawBin::Right: return "Right";
    case YawBin::FarRight: return "FarRight";
  }
  return "?";
}

Eigen::Matrix3d rotation_from_ypr(double yaw_deg, double pitch_deg,
                                  double roll_deg) {
  return rot_y(deg2rad(yaw_deg)) * rot_x(-deg2rad(pitch_deg)) *
         rot_z(deg2rad(roll_deg)) * base_orientation();
}

void euler_from_rotation(const Eigen::Matrix3d& cam_from_face,
                         double& yaw_deg, double& pitch_deg,
                         double& roll_deg) {
  // Undo the base orientation, then decompose RotY * RotX * RotZ.
  const Eigen::Matrix3d m = cam_from_face * base_orientation();
  yaw_deg = rad2deg(std::atan2(m(0, 2), m(2, 2)));
  pitch_deg = rad2deg(std::asin(std::clamp(m(1, 2), -1.0, 1.0)));
  roll_deg = rad2deg(std::atan2(m(1, 0), m(1, 1)));
}

HeadPose solve_pose(const LandmarkObservation& obs, const FaceModel3D& model,
                    const CameraIntrinsics& intr,
                    const PoseSolverOptions& opts) {
  validate(obs);
  const Correspondences c = gather_interior(obs, model, intr);

  Eigen::Matrix3d r;
  Eigen::Vector3d t;
  dlt_initialize(c, r, t);

  double prev_residual = angular_rms(c, r, t);
  int stall = 0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < c.model.size(); ++i) {
      const Eigen::Vector3d v = r * c.model[i] + t;
      const double norm = v.norm();
      const Eigen::Vector3d n = v / norm;
      const Eigen::Vector3d& u = c.rays[i];
      const Eigen::Vector3d res = n - u.dot(n) * u;

      const Eigen::Matrix3d proj_u =
          Eigen::Matrix3d::Identity() - u * u.transpose();
      const Eigen::Matrix3d dn_dv =
          (Eigen::Matrix3d::Identity() - n * n.transpose()) / norm;
      Eigen::Matrix<double, 3, 6> jac;
      jac.block<3, 3>(0, 0) = proj_u * dn_dv * (-skew(r * c.model[i]));
      jac.block<3, 3>(0, 3) = proj_u * dn_dv;

      h += jac.transpose() * jac;
      g += jac.transpose() * res;
    }

    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw DegenerateConfiguration("pose normal equations are rank-deficient");
    }
    const Eigen::Matrix<double, 6, 1> step = ldlt.solve(-g);
    if (!step.allFinite()) {
      throw DegenerateConfiguration("pose normal equations are rank-deficient");
    }

    r = exp_so3(step.head<3>()) * r;
    t += step.tail<3>();

    if (step.norm() < opts.step_tolerance) break;

    const double residual = angular_rms(c, r, t);
    if (residual >= prev_residual) {
      if (++stall >= opts.stall_limit) {
        throw NoConvergence("pose residual stopped decreasing");
      }
    } else {
      stall = 0;
    }
    prev_residual = residual;
  }

  HeadPose pose;
  euler_from_rotation(r, pose.yaw_deg, pose.pitch_deg, pose.roll_deg);
  pose.translation_mm = t;
  pose.rms_reprojection_px = pixel_rms(c, r, t, intr);
  return pose;
}

Bearing bearing_of(const LandmarkObservation& obs,
                   const CameraIntrinsics& intr) {
  const Eigen::Vector3d ray =
      undistort_point(obs.points[landmarks::kNoseTip], intr);
  return Bearing{rad2deg(std::atan2(ray.x(), ray.z()))};
}

YawBin classify_relative_yaw(double delta_deg,
                             const YawBinBoundaries& bounds) {
  const double d = wrap_deg(delta_deg);
  const double mag = std::abs(d);
  if (mag <= bounds.inner_deg) return YawBin::AtWearer;
  if (mag <= bounds.outer_deg) return d > 0 ? YawBin::Left : YawBin::Right;
  return d > 0 ? YawBin::FarLeft : YawBin::FarRight;
}

YawBin classify_yaw(const HeadPose& pose, Bearing bearing,
                    const YawBinBoundaries& bounds) {
  return classify_relative_yaw(pose.yaw_deg - bearing.deg, bounds);
}

}  // namespace sociocue
