#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sociocue/frame.hpp"
#include "sociocue/headpose.hpp"

namespace sociocue {

// Geometrically normalized face: 128x128 grayscale with the outer eye
// corners warped to fixed positions 32 px either side of center on the
// horizontal midline.
struct FaceChip {
  static constexpr int kSize = 128;
  static constexpr double kEyeOffset = 32.0;  // from chip center

  Frame image;  // kSize x kSize
  std::array<Eigen::Vector2d, landmarks::kCount> landmarks;

  static Eigen::Vector2d left_eye_anchor() {
    return {kSize / 2.0 - kEyeOffset, kSize / 2.0};
  }
  static Eigen::Vector2d right_eye_anchor() {
    return {kSize / 2.0 + kEyeOffset, kSize / 2.0};
  }
};

// Similarity warp (bilinear, replicated borders) onto the canonical chip.
// Throws DegenerateLandmarks when the eye corners coincide within 2 px and
// ValidationError when they lie outside the frame.
FaceChip normalize_face(const Frame& frame, const LandmarkObservation& obs);

// Concatenation of one 59-bin uniform LBP-8,1 histogram per interior
// landmark, each L1-normalized (or all-zero for a fully out-of-chip patch).
inline constexpr int kLbpBins = 59;
inline constexpr int kDescriptorDims = landmarks::kInteriorCount * kLbpBins;
using LbpDescriptor = std::vector<double>;

LbpDescriptor extract_descriptor(const FaceChip& chip);

// Histogram bin index of one raw LBP code under the uniform-pattern mapping
// (58 uniform codes plus one catch-all).
int lbp_uniform_bin(int code);

// Chi-square distance over bins with mass: sum (a-b)^2 / (a+b).
double chi_square(std::span<const double> a, std::span<const double> b);

struct IdentityLabel {
  bool known = false;
  std::string name;

  static IdentityLabel Known(std::string n) {
    return IdentityLabel{true, std::move(n)};
  }
  static IdentityLabel Unknown() { return IdentityLabel{}; }

  // Text used in speech output and logs.
  const std::string& display() const {
    static const std::string unknown = "unknown";
    return known ? name : unknown;
  }
  bool operator==(const IdentityLabel&) const = default;
};

// Enrolled descriptors per identity, plus the open-set rejection threshold.
// Enrollment is single-writer; matching is const and safe to run
// concurrently between writes.
class Gallery {
 public:
  // Names must be non-empty, unique per identity, consist of
  // [A-Za-z0-9_-], and must not be the reserved word "unknown".
  void enroll(const std::string& name, LbpDescriptor descriptor);

  double rejection_threshold() const { return theta_u_; }
  void set_rejection_threshold(double theta_u);

  // theta_u = 0.5 * (min impostor distance + max genuine distance) over all
  // enrolled pairs; `fallback` is used when fewer than two identities are
  // enrolled. Returns the new threshold.
  double calibrate_threshold(double fallback);

  struct Match {
    std::string name;
    double distance;
  };
  // Closed-set nearest neighbor; nullopt on an empty gallery. Ties go to
  // the lexicographically smallest name.
  std::optional<Match> nearest(const LbpDescriptor& d) const;

  std::size_t identity_count() const { return entries_.size(); }
  std::vector<std::string> names() const;
  const std::vector<LbpDescriptor>& samples(const std::string& name) const;

  // Directory layout: a text manifest naming theta_u and one binary
  // descriptor file per identity (magic "LBPG", u32 version, u32 count,
  // count * 3009 little-endian doubles).
  void save(const std::string& directory) const;
  static Gallery load(const std::string& directory);

 private:
  std::map<std::string, std::vector<LbpDescriptor>> entries_;
  double theta_u_ = 1.0;
};

// Open-set identification: Known(best name) when the nearest enrolled
// descriptor is within the rejection threshold, otherwise Unknown. An empty
// gallery yields Unknown with an infinite distance.
std::pair<IdentityLabel, double> identify(const Gallery& gallery,
                                          const LbpDescriptor& d);

}  // namespace sociocue
