#include "sociocue/face_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "sociocue/errors.hpp"

namespace sociocue {

namespace {

// x y z per landmark, millimeters. Bilaterally symmetric by construction.
constexpr double kCanonicalPoints[landmarks::kCount][3] = {
    // Jawline 0..16, image-left ear to image-right ear.
    {-63.0, 25.0, -48.0}, {-61.5, 10.0, -45.0}, {-58.5, -5.0, -42.0},
    {-54.0, -20.0, -38.0}, {-47.5, -34.0, -33.0}, {-38.5, -46.0, -28.0},
    {-27.5, -55.5, -24.0}, {-14.5, -62.0, -21.0}, {0.0, -64.5, -20.0},
    {14.5, -62.0, -21.0}, {27.5, -55.5, -24.0}, {38.5, -46.0, -28.0},
    {47.5, -34.0, -33.0}, {54.0, -20.0, -38.0}, {58.5, -5.0, -42.0},
    {61.5, 10.0, -45.0}, {63.0, 25.0, -48.0},
    // Left eyebrow 17..21.
    {-52.0, 38.5, -18.0}, {-43.0, 43.5, -13.5}, {-32.0, 45.5, -10.5},
    {-21.0, 44.0, -9.0}, {-11.0, 40.5, -9.5},
    // Right eyebrow 22..26.
    {11.0, 40.5, -9.5}, {21.0, 44.0, -9.0}, {32.0, 45.5, -10.5},
    {43.0, 43.5, -13.5}, {52.0, 38.5, -18.0},
    // Nose bridge 27..30 (30 = tip, the model origin).
    {0.0, 31.0, -10.0}, {0.0, 20.5, -5.0}, {0.0, 10.0, -1.5},
    {0.0, 0.0, 0.0},
    // Nose bottom 31..35.
    {-15.5, -7.5, -7.0}, {-8.0, -9.5, -4.0}, {0.0, -10.5, -3.0},
    {8.0, -9.5, -4.0}, {15.5, -7.5, -7.0},
    // Left eye 36..41 (36 = outer corner).
    {-44.5, 24.0, -21.0}, {-36.5, 28.0, -19.0}, {-27.5, 28.0, -18.5},
    {-19.5, 23.5, -19.0}, {-27.5, 20.0, -19.0}, {-36.5, 19.5, -19.5},
    // Right eye 42..47 (45 = outer corner).
    {19.5, 23.5, -19.0}, {27.5, 28.0, -18.5}, {36.5, 28.0, -19.0},
    {44.5, 24.0, -21.0}, {36.5, 19.5, -19.5}, {27.5, 20.0, -19.0},
    // Outer lip 48..59.
    {-26.0, -33.0, -14.0}, {-17.0, -27.5, -9.5}, {-6.5, -24.5, -7.0},
    {0.0, -25.5, -6.5}, {6.5, -24.5, -7.0}, {17.0, -27.5, -9.5},
    {26.0, -33.0, -14.0}, {17.5, -40.0, -12.0}, {7.0, -43.5, -9.5},
    {0.0, -44.5, -9.0}, {-7.0, -43.5, -9.5}, {-17.5, -40.0, -12.0},
    // Inner lip 60..67.
    {-21.0, -33.5, -11.5}, {-7.5, -30.5, -8.0}, {0.0, -31.0, -7.5},
    {7.5, -30.5, -8.0}, {21.0, -33.5, -11.5}, {8.0, -36.5, -9.0},
    {0.0, -37.5, -8.5}, {-8.0, -36.5, -9.0},
};

// Mirror pairs (left index, right index) under x-negation; indices that map
// to themselves must lie on the midline.
constexpr std::pair<int, int> kMirrorPairs[] = {
    {0, 16}, {1, 15}, {2, 14}, {3, 13}, {4, 12}, {5, 11}, {6, 10}, {7, 9},
    {17, 26}, {18, 25}, {19, 24}, {20, 23}, {21, 22},
    {31, 35}, {32, 34},
    {36, 45}, {37, 44}, {38, 43}, {39, 42}, {40, 47}, {41, 46},
    {48, 54}, {49, 53}, {50, 52}, {59, 55}, {58, 56},
    {60, 64}, {61, 63}, {67, 65},
};
constexpr int kMidlineIndices[] = {8, 27, 28, 29, 30, 33, 51, 57, 62, 66};

constexpr double kSymmetryToleranceMm = 1.0;

}  // namespace

FaceModel3D::FaceModel3D(const Points& points) : points_(points) {}

const FaceModel3D& FaceModel3D::canonical() {
  static const FaceModel3D model = [] {
    Points pts;
    for (int i = 0; i < landmarks::kCount; ++i) {
      pts[i] = Eigen::Vector3d(kCanonicalPoints[i][0], kCanonicalPoints[i][1],
                               kCanonicalPoints[i][2]);
    }
    FaceModel3D m(pts);
    m.validate();
    return m;
  }();
  return model;
}

FaceModel3D FaceModel3D::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open face model file: " + path);

  Points pts;
  std::array<bool, landmarks::kCount> seen{};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int index;
    double x, y, z;
    if (!(ls >> index)) continue;  // blank or comment-only line
    if (!(ls >> x >> y >> z)) {
      throw ParseError("face model line needs \"index x y z\"", line_no);
    }
    if (index < 0 || index >= landmarks::kCount) {
      throw ParseError("landmark index out of range 0..67", line_no);
    }
    if (seen[index]) {
      throw ParseError("duplicate landmark index " + std::to_string(index),
                       line_no);
    }
    seen[index] = true;
    pts[index] = Eigen::Vector3d(x, y, z);
  }
  for (int i = 0; i < landmarks::kCount; ++i) {
    if (!seen[i]) {
      throw ValidationError("face model is missing landmark " +
                            std::to_string(i));
    }
  }
  FaceModel3D model(pts);
  model.validate();
  return model;
}

void FaceModel3D::validate() const {
  for (const auto& p : points_) {
    if (!p.allFinite()) throw ValidationError("face model point not finite");
  }
  if (points_[landmarks::kNoseTip].norm() > 1e-9) {
    throw ValidationError("face model origin must be the nose tip");
  }
  for (const auto& [l, r] : kMirrorPairs) {
    const Eigen::Vector3d mirrored(-points_[l].x(), points_[l].y(),
                                   points_[l].z());
    if ((mirrored - points_[r]).norm() > kSymmetryToleranceMm) {
      throw ValidationError("landmarks " + std::to_string(l) + "/" +
                            std::to_string(r) + " break bilateral symmetry");
    }
  }
  for (int i : kMidlineIndices) {
    if (std::abs(points_[i].x()) > kSymmetryToleranceMm) {
      throw ValidationError("midline landmark " + std::to_string(i) +
                            " is off-center");
    }
  }
}

}  // namespace sociocue
