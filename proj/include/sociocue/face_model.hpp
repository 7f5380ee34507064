#pragma once

#include <Eigen/Core>
#include <array>
#include <string>

namespace sociocue {

// Landmark index conventions of the standard 68-point scheme.
namespace landmarks {
inline constexpr int kCount = 68;
inline constexpr int kContourBegin = 0;   // jawline 0..16
inline constexpr int kInteriorBegin = 17; // brows, nose, eyes, mouth
inline constexpr int kInteriorCount = 51;
inline constexpr int kNoseTip = 30;
inline constexpr int kLeftEyeOuter = 36;  // image-left outer eye corner
inline constexpr int kRightEyeOuter = 45; // image-right outer eye corner
}  // namespace landmarks

// Fixed 68-point 3D head model in a canonical frame: millimeters, origin at
// the nose tip, x right, y up, z out of the face. Interior points (17..67)
// drive pose estimation; contour points exist for completeness and for the
// simulator's synthetic projections.
class FaceModel3D {
 public:
  using Points = std::array<Eigen::Vector3d, landmarks::kCount>;

  // Built-in anthropometric average head.
  static const FaceModel3D& canonical();

  // Loads the "index x y z" text format. '#' starts a comment. Every index
  // 0..67 must appear exactly once. Validates on load.
  static FaceModel3D load(const std::string& path);

  explicit FaceModel3D(const Points& points);

  const Points& points() const { return points_; }
  const Eigen::Vector3d& point(int index) const { return points_[index]; }

  // Checks bilateral symmetry (mirrored pairs match under x-negation within
  // 1 mm) and the nose-tip origin. Throws ValidationError.
  void validate() const;

 private:
  Points points_;
};

}  // namespace sociocue
