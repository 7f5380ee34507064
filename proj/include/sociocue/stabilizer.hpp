#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sociocue/frame.hpp"

namespace sociocue {

// One sparse-flow correspondence between consecutive frames. `residual` is
// the forward-backward tracking error in pixels.
struct FlowPair {
  Eigen::Vector2d from;
  Eigen::Vector2d to;
  double residual = 0.0;
};

// Global 2D motion model: x' = scale * R(rotation) * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation = 0.0;  // radians
  Eigen::Vector2d translation{0.0, 0.0};

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    return {scale * (c * p.x() - s * p.y()) + translation.x(),
            scale * (s * p.x() + c * p.y()) + translation.y()};
  }

  // this after other: (this.compose(other))(p) == this(other(p)).
  SimilarityTransform compose(const SimilarityTransform& other) const {
    SimilarityTransform r;
    r.scale = scale * other.scale;
    r.rotation = rotation + other.rotation;
    r.translation = apply(other.translation);
    return r;
  }

  SimilarityTransform inverse() const {
    SimilarityTransform r;
    r.scale = 1.0 / scale;
    r.rotation = -rotation;
    const double c = std::cos(r.rotation);
    const double s = std::sin(r.rotation);
    const Eigen::Vector2d nt = -translation;
    r.translation = {r.scale * (c * nt.x() - s * nt.y()),
                     r.scale * (s * nt.x() + c * nt.y())};
    return r;
  }

  bool near_identity(double linear_tol = 1e-12,
                     double translation_tol = 1e-9) const {
    return std::abs(scale - 1.0) < linear_tol &&
           std::abs(rotation) < linear_tol &&
           translation.norm() < translation_tol;
  }
};

struct FlowOptions {
  int pyramid_levels = 3;
  int window = 15;              // LK window side, pixels
  int max_iterations = 20;
  double epsilon = 0.01;        // convergence step, pixels
  double fb_threshold = 1.0;    // forward-backward rejection, pixels
  double quality = 0.01;        // corner response fraction of the maximum
  int min_distance = 8;         // corner spacing, pixels
};

// Finds corner-like features in `prev` (minimum-eigenvalue criterion) and
// tracks them into `cur` with pyramidal iterative flow. Pairs that fail the
// forward-backward consistency check are dropped.
std::vector<FlowPair> track_flow(const Frame& prev, const Frame& cur,
                                 int max_features,
                                 const FlowOptions& opts = {});

struct RansacOptions {
  double inlier_threshold_px = 2.0;
  double min_inlier_ratio = 0.5;
  int iterations = 128;
  std::uint64_t seed = 0x5eedc0de;
};

// Robust similarity fit over flow pairs. Deterministic for a fixed seed.
// Throws NoConsensus when fewer than 4 pairs are given, when the inlier
// ratio stays below the minimum, or when the fitted scale leaves (0.5, 2).
SimilarityTransform estimate_global_motion(std::span<const FlowPair> pairs,
                                           const RansacOptions& opts = {});

struct StabilizerOptions {
  // Centered moving-average half-width; the full window is 2r+1 frames,
  // truncated wherever frames do not exist (stream start, live edge).
  int smoothing_radius = 15;
  int max_features = 200;
  FlowOptions flow{};
  RansacOptions ransac{};
};

// Compensates camera shake: tracks global motion frame to frame, smooths the
// cumulative trajectory, and warps each frame onto the smoothed path.
// Single-writer streaming state; one instance per camera stream.
class Stabilizer {
 public:
  explicit Stabilizer(StabilizerOptions opts = {});

  // Streaming: warps `frame` using the causally available part of the
  // smoothing window. On tracking failure the input is returned unchanged
  // and the event flagged.
  Frame step(const Frame& frame);

  // Batch: two passes over a recorded sequence, applying the full centered
  // window everywhere it fits.
  std::vector<Frame> stabilize(std::span<const Frame> frames);

  bool last_step_passthrough() const { return last_passthrough_; }
  int failure_count() const { return failures_; }
  // Correction applied by the most recent step (smoothed minus raw path).
  const SimilarityTransform& last_correction() const {
    return last_correction_;
  }

 private:
  std::optional<SimilarityTransform> relative_motion(const Frame& prev,
                                                     const Frame& cur);
  StabilizerOptions opts_;
  std::optional<Frame> prev_;
  std::vector<Eigen::Vector4d> cumulative_;  // (scale, rotation, tx, ty)
  SimilarityTransform last_correction_;
  bool last_passthrough_ = false;
  int failures_ = 0;
};

// Warps with bilinear sampling and replicated borders: the output pixel at q
// samples the input at warp_to_input(q).
Frame warp_frame(const Frame& input, const SimilarityTransform& warp_to_input);

}  // namespace sociocue
