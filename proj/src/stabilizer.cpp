#include "sociocue/stabilizer.hpp"

#include <algorithm>
#include <complex>
#include <numeric>
#include <random>

#include "sociocue/errors.hpp"

namespace sociocue {

namespace {

struct GrayImage {
  int w = 0;
  int h = 0;
  std::vector<float> v;

  float at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
  float& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }

  float sample(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
    const double bot = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
    return static_cast<float>((1.0 - fy) * top + fy * bot);
  }
};

GrayImage from_frame(const Frame& f) {
  GrayImage img;
  img.w = f.width;
  img.h = f.height;
  img.v.resize(f.data.size());
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    img.v[i] = static_cast<float>(f.data[i]);
  }
  return img;
}

GrayImage downsample(const GrayImage& src) {
  GrayImage dst;
  dst.w = src.w / 2;
  dst.h = src.h / 2;
  dst.v.resize(static_cast<std::size_t>(dst.w) * dst.h);
  for (int y = 0; y < dst.h; ++y) {
    for (int x = 0; x < dst.w; ++x) {
      dst.at(x, y) = 0.25f * (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                              src.at(2 * x, 2 * y + 1) +
                              src.at(2 * x + 1, 2 * y + 1));
    }
  }
  return dst;
}

struct Pyramid {
  std::vector<GrayImage> img;
  std::vector<GrayImage> gx;
  std::vector<GrayImage> gy;
};

void add_gradients(Pyramid& p) {
  for (const auto& im : p.img) {
    GrayImage gx, gy;
    gx.w = gy.w = im.w;
    gx.h = gy.h = im.h;
    gx.v.assign(im.v.size(), 0.0f);
    gy.v.assign(im.v.size(), 0.0f);
    for (int y = 0; y < im.h; ++y) {
      const int ym = std::max(y - 1, 0);
      const int yp = std::min(y + 1, im.h - 1);
      for (int x = 0; x < im.w; ++x) {
        const int xm = std::max(x - 1, 0);
        const int xp = std::min(x + 1, im.w - 1);
        gx.at(x, y) = 0.5f * (im.at(xp, y) - im.at(xm, y));
        gy.at(x, y) = 0.5f * (im.at(x, yp) - im.at(x, ym));
      }
    }
    p.gx.push_back(std::move(gx));
    p.gy.push_back(std::move(gy));
  }
}

Pyramid build_pyramid(const Frame& f, int levels) {
  Pyramid p;
  p.img.push_back(from_frame(f));
  for (int l = 1; l < levels; ++l) {
    const GrayImage& top = p.img.back();
    if (top.w / 2 < 16 || top.h / 2 < 16) break;
    p.img.push_back(downsample(top));
  }
  add_gradients(p);
  return p;
}

// Shi-Tomasi style feature selection: minimum eigenvalue of the local
// structure tensor, absolute floor, then greedy spacing on a grid.
std::vector<Eigen::Vector2d> detect_features(const GrayImage& im,
                                             const GrayImage& gx,
                                             const GrayImage& gy,
                                             int max_features,
                                             const FlowOptions& opts) {
  constexpr int kBlockRadius = 2;
  constexpr int kMargin = 8;
  constexpr double kAbsoluteFloor = 1e-3;

  const int w = im.w, h = im.h;
  std::vector<double> response(static_cast<std::size_t>(w) * h, 0.0);
  double max_response = 0.0;
  for (int y = kMargin; y < h - kMargin; ++y) {
    for (int x = kMargin; x < w - kMargin; ++x) {
      double sxx = 0, syy = 0, sxy = 0;
      for (int dy = -kBlockRadius; dy <= kBlockRadius; ++dy) {
        for (int dx = -kBlockRadius; dx <= kBlockRadius; ++dx) {
          const double ix = gx.at(x + dx, y + dy);
          const double iy = gy.at(x + dx, y + dy);
          sxx += ix * ix;
          syy += iy * iy;
          sxy += ix * iy;
        }
      }
      const double tr = sxx + syy;
      const double det_part =
          std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
      const double min_eig = 0.5 * (tr - det_part);
      response[static_cast<std::size_t>(y) * w + x] = min_eig;
      max_response = std::max(max_response, min_eig);
    }
  }
  if (max_response < kAbsoluteFloor) return {};

  const double threshold = std::max(opts.quality * max_response, kAbsoluteFloor);
  std::vector<std::pair<double, int>> candidates;
  for (int y = kMargin; y < h - kMargin; ++y) {
    for (int x = kMargin; x < w - kMargin; ++x) {
      const double r = response[static_cast<std::size_t>(y) * w + x];
      if (r >= threshold) candidates.emplace_back(r, y * w + x);
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) {
              return a.first > b.first || (a.first == b.first && a.second < b.second);
            });

  const int cell = std::max(opts.min_distance, 1);
  const int gw = w / cell + 1;
  const int gh = h / cell + 1;
  std::vector<std::vector<Eigen::Vector2d>> grid(
      static_cast<std::size_t>(gw) * gh);
  std::vector<Eigen::Vector2d> features;
  const double min_dist2 =
      static_cast<double>(opts.min_distance) * opts.min_distance;
  for (const auto& [r, idx] : candidates) {
    if (static_cast<int>(features.size()) >= max_features) break;
    const Eigen::Vector2d p(idx % w, idx / w);
    const int cx = static_cast<int>(p.x()) / cell;
    const int cy = static_cast<int>(p.y()) / cell;
    bool crowded = false;
    for (int ny = std::max(cy - 1, 0); ny <= std::min(cy + 1, gh - 1) && !crowded; ++ny) {
      for (int nx = std::max(cx - 1, 0); nx <= std::min(cx + 1, gw - 1) && !crowded; ++nx) {
        for (const auto& q : grid[static_cast<std::size_t>(ny) * gw + nx]) {
          if ((q - p).squaredNorm() < min_dist2) {
            crowded = true;
            break;
          }
        }
      }
    }
    if (crowded) continue;
    grid[static_cast<std::size_t>(cy) * gw + cx].push_back(p);
    features.push_back(p);
  }
  return features;
}

// Pyramidal Lucas-Kanade for one feature. Returns the matched position in
// the target frame, or nullopt when the system is degenerate or diverges.
std::optional<Eigen::Vector2d> lk_track(const Pyramid& src, const Pyramid& dst,
                                        const Eigen::Vector2d& p0,
                                        const FlowOptions& opts) {
  const int levels = static_cast<int>(src.img.size());
  const int win_r = opts.window / 2;
  Eigen::Vector2d flow{0.0, 0.0};

  for (int level = levels - 1; level >= 0; --level) {
    const double inv = 1.0 / (1 << level);
    const Eigen::Vector2d p = p0 * inv;
    const GrayImage& a = src.img[level];
    const GrayImage& agx = src.gx[level];
    const GrayImage& agy = src.gy[level];
    const GrayImage& b = dst.img[level];

    // Spatial gradient matrix over the source window, fixed per level.
    double gxx = 0, gyy = 0, gxy = 0;
    std::vector<double> ix((2 * win_r + 1) * (2 * win_r + 1));
    std::vector<double> iy(ix.size());
    std::vector<double> iv(ix.size());
    int k = 0;
    for (int dy = -win_r; dy <= win_r; ++dy) {
      for (int dx = -win_r; dx <= win_r; ++dx, ++k) {
        const double sx = p.x() + dx;
        const double sy = p.y() + dy;
        ix[k] = agx.sample(sx, sy);
        iy[k] = agy.sample(sx, sy);
        iv[k] = a.sample(sx, sy);
        gxx += ix[k] * ix[k];
        gyy += iy[k] * iy[k];
        gxy += ix[k] * iy[k];
      }
    }
    const double det = gxx * gyy - gxy * gxy;
    const double tr = gxx + gyy;
    const double min_eig = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
    if (min_eig < 1e-4) return std::nullopt;

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
      double bx = 0, by = 0;
      k = 0;
      for (int dy = -win_r; dy <= win_r; ++dy) {
        for (int dx = -win_r; dx <= win_r; ++dx, ++k) {
          const double diff =
              iv[k] - b.sample(p.x() + flow.x() + dx, p.y() + flow.y() + dy);
          bx += diff * ix[k];
          by += diff * iy[k];
        }
      }
      const Eigen::Vector2d d((gyy * bx - gxy * by) / det,
                              (gxx * by - gxy * bx) / det);
      flow += d;
      if (std::abs(flow.x()) > b.w || std::abs(flow.y()) > b.h) {
        return std::nullopt;  // diverged
      }
      if (d.norm() < opts.epsilon) break;
    }
    if (level > 0) flow *= 2.0;
  }
  return p0 + flow;
}

SimilarityTransform fit_from_two(const FlowPair& p, const FlowPair& q) {
  const std::complex<double> za(q.from.x() - p.from.x(),
                                q.from.y() - p.from.y());
  const std::complex<double> zb(q.to.x() - p.to.x(), q.to.y() - p.to.y());
  if (std::abs(za) < 1e-9) throw DegenerateConfiguration("coincident sample");
  const std::complex<double> w = zb / za;
  SimilarityTransform t;
  t.scale = std::abs(w);
  t.rotation = std::arg(w);
  const std::complex<double> a0(p.from.x(), p.from.y());
  const std::complex<double> b0(p.to.x(), p.to.y());
  const std::complex<double> trans = b0 - w * a0;
  t.translation = {trans.real(), trans.imag()};
  return t;
}

SimilarityTransform fit_least_squares(std::span<const FlowPair> pairs,
                                      std::span<const int> indices) {
  Eigen::Vector2d ca{0, 0}, cb{0, 0};
  for (int i : indices) {
    ca += pairs[i].from;
    cb += pairs[i].to;
  }
  ca /= static_cast<double>(indices.size());
  cb /= static_cast<double>(indices.size());

  double num_c = 0, num_s = 0, den = 0;
  for (int i : indices) {
    const Eigen::Vector2d a = pairs[i].from - ca;
    const Eigen::Vector2d b = pairs[i].to - cb;
    num_c += a.x() * b.x() + a.y() * b.y();
    num_s += a.x() * b.y() - a.y() * b.x();
    den += a.squaredNorm();
  }
  if (den < 1e-12) {
    throw DegenerateConfiguration("flow sample spans no area");
  }
  SimilarityTransform t;
  t.rotation = std::atan2(num_s, num_c);
  t.scale = std::hypot(num_c, num_s) / den;
  const double c = std::cos(t.rotation);
  const double s = std::sin(t.rotation);
  t.translation = {cb.x() - t.scale * (c * ca.x() - s * ca.y()),
                   cb.y() - t.scale * (s * ca.x() + c * ca.y())};
  return t;
}

std::vector<int> collect_inliers(std::span<const FlowPair> pairs,
                                 const SimilarityTransform& t,
                                 double threshold) {
  std::vector<int> inliers;
  const double t2 = threshold * threshold;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if ((t.apply(pairs[i].from) - pairs[i].to).squaredNorm() <= t2) {
      inliers.push_back(static_cast<int>(i));
    }
  }
  return inliers;
}

}  // namespace

std::vector<FlowPair> track_flow(const Frame& prev, const Frame& cur,
                                 int max_features, const FlowOptions& opts) {
  if (!prev.structurally_valid() || !cur.structurally_valid()) {
    throw ValidationError("frames must be at least 32x32 with matching data");
  }
  if (!prev.same_size(cur)) {
    throw DimensionMismatch("frame dimensions differ: " +
                            std::to_string(prev.width) + "x" +
                            std::to_string(prev.height) + " vs " +
                            std::to_string(cur.width) + "x" +
                            std::to_string(cur.height));
  }
  if (max_features < 8) {
    throw ValidationError("max_features must be at least 8");
  }

  Pyramid src = build_pyramid(prev, opts.pyramid_levels);
  Pyramid dst = build_pyramid(cur, opts.pyramid_levels);

  const auto features =
      detect_features(src.img[0], src.gx[0], src.gy[0], max_features, opts);
  if (static_cast<int>(features.size()) < 8) {
    throw InsufficientTexture("only " + std::to_string(features.size()) +
                              " trackable features found");
  }

  std::vector<FlowPair> pairs;
  pairs.reserve(features.size());
  for (const auto& f : features) {
    const auto fwd = lk_track(src, dst, f, opts);
    if (!fwd) continue;
    if (fwd->x() < -1.0 || fwd->x() > cur.width || fwd->y() < -1.0 ||
        fwd->y() > cur.height) {
      continue;
    }
    const auto back = lk_track(dst, src, *fwd, opts);
    if (!back) continue;
    const double fb_err = (*back - f).norm();
    if (fb_err > opts.fb_threshold) continue;
    pairs.push_back(FlowPair{f, *fwd, fb_err});
  }
  return pairs;
}

SimilarityTransform estimate_global_motion(std::span<const FlowPair> pairs,
                                           const RansacOptions& opts) {
  const int n = static_cast<int>(pairs.size());
  if (n < 4) {
    throw NoConsensus("need at least 4 flow pairs, got " + std::to_string(n));
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<int> best_inliers;
  for (int iter = 0; iter < opts.iterations; ++iter) {
    const int i = static_cast<int>(rng() % n);
    int j = static_cast<int>(rng() % n);
    if (j == i) j = (j + 1) % n;
    SimilarityTransform model;
    try {
      model = fit_from_two(pairs[i], pairs[j]);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    auto inliers = collect_inliers(pairs, model, opts.inlier_threshold_px);
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }

  if (best_inliers.size() < opts.min_inlier_ratio * n) {
    throw NoConsensus("inlier ratio " +
                      std::to_string(static_cast<double>(best_inliers.size()) / n) +
                      " below minimum");
  }

  SimilarityTransform fit = fit_least_squares(pairs, best_inliers);
  const auto refined = collect_inliers(pairs, fit, opts.inlier_threshold_px);
  if (refined.size() >= 2) fit = fit_least_squares(pairs, refined);

  if (fit.scale <= 0.5 || fit.scale >= 2.0) {
    throw NoConsensus("fitted scale " + std::to_string(fit.scale) +
                      " outside the valid range");
  }
  return fit;
}

Frame warp_frame(const Frame& input, const SimilarityTransform& warp_to_input) {
  Frame out;
  out.width = input.width;
  out.height = input.height;
  out.timestamp_ms = input.timestamp_ms;
  out.data.resize(input.data.size());
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Eigen::Vector2d src = warp_to_input.apply({static_cast<double>(x),
                                                       static_cast<double>(y)});
      const double v = input.sample(src.x(), src.y());
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(
          std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

Stabilizer::Stabilizer(StabilizerOptions opts) : opts_(std::move(opts)) {}

std::optional<SimilarityTransform> Stabilizer::relative_motion(
    const Frame& prev, const Frame& cur) {
  try {
    const auto pairs = track_flow(prev, cur, opts_.max_features, opts_.flow);
    return estimate_global_motion(pairs, opts_.ransac);
  } catch (const InsufficientTexture&) {
    ++failures_;
    return std::nullopt;
  } catch (const NoConsensus&) {
    ++failures_;
    return std::nullopt;
  }
}

namespace {

Eigen::Vector4d to_params(const SimilarityTransform& t) {
  return {t.scale, t.rotation, t.translation.x(), t.translation.y()};
}

SimilarityTransform from_params(const Eigen::Vector4d& p) {
  SimilarityTransform t;
  t.scale = p(0);
  t.rotation = p(1);
  t.translation = {p(2), p(3)};
  return t;
}

SimilarityTransform window_mean(const std::vector<Eigen::Vector4d>& traj,
                                int center, int radius) {
  const int lo = std::max(center - radius, 0);
  const int hi = std::min(center + radius, static_cast<int>(traj.size()) - 1);
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  for (int i = lo; i <= hi; ++i) acc += traj[i];
  return from_params(acc / static_cast<double>(hi - lo + 1));
}

}  // namespace

Frame Stabilizer::step(const Frame& frame) {
  last_passthrough_ = false;
  last_correction_ = SimilarityTransform{};
  if (!prev_) {
    prev_ = frame;
    cumulative_.push_back(to_params(SimilarityTransform{}));
    return frame;  // no history to smooth
  }

  const auto motion = relative_motion(*prev_, frame);
  prev_ = frame;
  const SimilarityTransform cumulative_prev = from_params(cumulative_.back());
  if (!motion) {
    last_passthrough_ = true;
    cumulative_.push_back(to_params(cumulative_prev));
    return frame;
  }
  const SimilarityTransform cumulative = motion->compose(cumulative_prev);
  cumulative_.push_back(to_params(cumulative));

  const int t = static_cast<int>(cumulative_.size()) - 1;
  const SimilarityTransform smoothed =
      window_mean(cumulative_, t, opts_.smoothing_radius);
  const SimilarityTransform correction =
      smoothed.compose(cumulative.inverse());
  last_correction_ = correction;
  if (correction.near_identity()) return frame;
  return warp_frame(frame, correction.inverse());
}

std::vector<Frame> Stabilizer::stabilize(std::span<const Frame> frames) {
  std::vector<Eigen::Vector4d> traj;
  std::vector<bool> tracked;
  traj.reserve(frames.size());
  tracked.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i == 0) {
      traj.push_back(to_params(SimilarityTransform{}));
      tracked.push_back(true);
      continue;
    }
    const auto motion = relative_motion(frames[i - 1], frames[i]);
    const SimilarityTransform prev = from_params(traj.back());
    traj.push_back(
        to_params(motion ? motion->compose(prev) : prev));
    tracked.push_back(motion.has_value());
  }

  std::vector<Frame> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!tracked[i]) {
      out.push_back(frames[i]);
      continue;
    }
    const SimilarityTransform cumulative = from_params(traj[i]);
    const SimilarityTransform smoothed =
        window_mean(traj, static_cast<int>(i), opts_.smoothing_radius);
    const SimilarityTransform correction =
        smoothed.compose(cumulative.inverse());
    if (correction.near_identity()) {
      out.push_back(frames[i]);
    } else {
      out.push_back(warp_frame(frames[i], correction.inverse()));
    }
  }
  return out;
}

}  // namespace sociocue
