#include "sociocue/faceid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sociocue/errors.hpp"

namespace sociocue {

namespace {

static_assert(std::endian::native == std::endian::little,
              "gallery files are little-endian");

bool valid_identity_name(const std::string& name) {
  if (name.empty() || name == "unknown") return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

// Neighbor offsets for LBP-8,1, counterclockwise from +x. Axis-aligned
// entries are exact so those samples reduce to plain pixel reads.
constexpr double kDiag = 0.70710678118654752440;
constexpr double kNeighborOffsets[8][2] = {
    {1.0, 0.0},  {kDiag, kDiag},   {0.0, 1.0},  {-kDiag, kDiag},
    {-1.0, 0.0}, {-kDiag, -kDiag}, {0.0, -1.0}, {kDiag, -kDiag},
};

const std::array<int, 256>& uniform_bin_table() {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
      const int rotated = ((code << 1) | (code >> 7)) & 0xFF;
      const int transitions = std::popcount(static_cast<unsigned>(code ^ rotated));
      t[code] = transitions <= 2 ? next++ : -1;
    }
    for (int code = 0; code < 256; ++code) {
      if (t[code] < 0) t[code] = 58;  // catch-all bin
    }
    return t;
  }();
  return table;
}

// Bilinear difference sample: sum of w_i * (pixel_i - center). Comparing
// this against zero keeps the neighbor >= center test exact under constant
// intensity offsets.
double sample_diff(const Frame& img, double x, double y, int center) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1.0 - fx) * (1.0 - fy) * (img.at(x0, y0) - center) +
         fx * (1.0 - fy) * (img.at(x1, y0) - center) +
         (1.0 - fx) * fy * (img.at(x0, y1) - center) +
         fx * fy * (img.at(x1, y1) - center);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

int lbp_uniform_bin(int code) { return uniform_bin_table()[code & 0xFF]; }

FaceChip normalize_face(const Frame& frame, const LandmarkObservation& obs) {
  const Eigen::Vector2d eye_l = obs.points[landmarks::kLeftEyeOuter];
  const Eigen::Vector2d eye_r = obs.points[landmarks::kRightEyeOuter];
  if (!frame.structurally_valid()) {
    throw ValidationError("normalize_face needs a valid source frame");
  }
  const auto inside = [&](const Eigen::Vector2d& p) {
    return p.x() >= 0 && p.x() < frame.width && p.y() >= 0 &&
           p.y() < frame.height;
  };
  if (!inside(eye_l) || !inside(eye_r)) {
    throw ValidationError("eye-corner landmarks must lie inside the frame");
  }
  if ((eye_r - eye_l).norm() < 2.0) {
    throw DegenerateLandmarks("eye corners coincide within 2 px");
  }

  // Similarity frame->chip pinned at the two eye corners.
  const std::complex<double> fl(eye_l.x(), eye_l.y());
  const std::complex<double> fr(eye_r.x(), eye_r.y());
  const std::complex<double> cl(FaceChip::left_eye_anchor().x(),
                                FaceChip::left_eye_anchor().y());
  const std::complex<double> cr(FaceChip::right_eye_anchor().x(),
                                FaceChip::right_eye_anchor().y());
  const std::complex<double> w = (cr - cl) / (fr - fl);
  const std::complex<double> offset = cl - w * fl;
  const std::complex<double> w_inv = 1.0 / w;

  FaceChip chip;
  chip.image.width = FaceChip::kSize;
  chip.image.height = FaceChip::kSize;
  chip.image.timestamp_ms = obs.timestamp_ms;
  chip.image.data.resize(FaceChip::kSize * FaceChip::kSize);
  for (int y = 0; y < FaceChip::kSize; ++y) {
    for (int x = 0; x < FaceChip::kSize; ++x) {
      const std::complex<double> src =
          w_inv * (std::complex<double>(x, y) - offset);
      const double v = frame.sample(src.real(), src.imag());
      chip.image.at(x, y) =
          static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
  }
  for (int i = 0; i < landmarks::kCount; ++i) {
    const std::complex<double> mapped =
        w * std::complex<double>(obs.points[i].x(), obs.points[i].y()) + offset;
    chip.landmarks[i] = {mapped.real(), mapped.imag()};
  }
  return chip;
}

LbpDescriptor extract_descriptor(const FaceChip& chip) {
  constexpr int kPatch = 16;
  constexpr int kHalf = kPatch / 2;
  const auto& bins = uniform_bin_table();

  LbpDescriptor d(kDescriptorDims, 0.0);
  for (int li = landmarks::kInteriorBegin; li < landmarks::kCount; ++li) {
    const int slot = li - landmarks::kInteriorBegin;
    double* hist = d.data() + static_cast<std::size_t>(slot) * kLbpBins;

    const int cx = static_cast<int>(std::lround(chip.landmarks[li].x()));
    const int cy = static_cast<int>(std::lround(chip.landmarks[li].y()));
    // Codes need a 1 px neighborhood, so the codeable region shrinks by one.
    const int x_lo = std::max(cx - kHalf, 1);
    const int x_hi = std::min(cx + kHalf - 1, FaceChip::kSize - 2);
    const int y_lo = std::max(cy - kHalf, 1);
    const int y_hi = std::min(cy + kHalf - 1, FaceChip::kSize - 2);
    if (x_lo > x_hi || y_lo > y_hi) continue;  // fully out of chip: all-zero

    int count = 0;
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const int center = chip.image.at(x, y);
        int code = 0;
        for (int k = 0; k < 8; ++k) {
          const double diff =
              sample_diff(chip.image, x + kNeighborOffsets[k][0],
                          y + kNeighborOffsets[k][1], center);
          if (diff >= 0.0) code |= 1 << k;
        }
        hist[bins[code]] += 1.0;
        ++count;
      }
    }
    if (count > 0) {
      for (int b = 0; b < kLbpBins; ++b) hist[b] /= count;
    }
  }
  return d;
}

double chi_square(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("chi-square operands differ in dimension");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = a[i] + b[i];
    if (denom > 0.0) {
      const double diff = a[i] - b[i];
      sum += diff * diff / denom;
    }
  }
  return sum;
}

void Gallery::enroll(const std::string& name, LbpDescriptor descriptor) {
  if (!valid_identity_name(name)) {
    throw ValidationError("invalid identity name: \"" + name + "\"");
  }
  if (descriptor.size() != kDescriptorDims) {
    throw ValidationError("descriptor has wrong dimension");
  }
  entries_[name].push_back(std::move(descriptor));
}

void Gallery::set_rejection_threshold(double theta_u) {
  if (!(theta_u > 0.0)) {
    throw ValidationError("rejection threshold must be positive");
  }
  theta_u_ = theta_u;
}

double Gallery::calibrate_threshold(double fallback) {
  if (entries_.size() < 2) {
    set_rejection_threshold(fallback);
    return theta_u_;
  }
  double min_impostor = std::numeric_limits<double>::max();
  double max_genuine = 0.0;
  for (auto a = entries_.begin(); a != entries_.end(); ++a) {
    for (std::size_t i = 0; i < a->second.size(); ++i) {
      for (std::size_t j = i + 1; j < a->second.size(); ++j) {
        max_genuine =
            std::max(max_genuine, chi_square(a->second[i], a->second[j]));
      }
      for (auto b = std::next(a); b != entries_.end(); ++b) {
        for (const auto& other : b->second) {
          min_impostor =
              std::min(min_impostor, chi_square(a->second[i], other));
        }
      }
    }
  }
  set_rejection_threshold(0.5 * (min_impostor + max_genuine));
  return theta_u_;
}

std::optional<Gallery::Match> Gallery::nearest(const LbpDescriptor& d) const {
  std::optional<Match> best;
  for (const auto& [name, samples] : entries_) {  // map order = name order
    for (const auto& s : samples) {
      const double dist = chi_square(s, d);
      if (!best || dist < best->distance) best = Match{name, dist};
    }
  }
  return best;
}

std::vector<std::string> Gallery::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

const std::vector<LbpDescriptor>& Gallery::samples(
    const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ValidationError("no such identity: " + name);
  }
  return it->second;
}

std::pair<IdentityLabel, double> identify(const Gallery& gallery,
                                          const LbpDescriptor& d) {
  const auto best = gallery.nearest(d);
  if (!best) {
    return {IdentityLabel::Unknown(),
            std::numeric_limits<double>::infinity()};
  }
  if (best->distance <= gallery.rejection_threshold()) {
    return {IdentityLabel::Known(best->name), best->distance};
  }
  return {IdentityLabel::Unknown(), best->distance};
}

void Gallery::save(const std::string& directory) const {
  namespace fs = std::filesystem;
  fs::create_directories(directory);

  std::ofstream manifest(fs::path(directory) / "gallery.manifest");
  if (!manifest) throw Error("cannot write gallery manifest in " + directory);
  manifest << "version 1\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "theta_u %.17g\n", theta_u_);
  manifest << buf;

  for (const auto& [name, samples] : entries_) {
    const std::string filename = name + ".lbpd";
    manifest << "identity " << name << " " << filename << "\n";

    std::ofstream out(fs::path(directory) / filename, std::ios::binary);
    if (!out) throw Error("cannot write descriptor file " + filename);
    out.write("LBPG", 4);
    write_u32(out, 1);  // version
    write_u32(out, static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
      out.write(reinterpret_cast<const char*>(s.data()),
                static_cast<std::streamsize>(s.size() * sizeof(double)));
    }
  }
}

Gallery Gallery::load(const std::string& directory) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(directory) / "gallery.manifest");
  if (!manifest) throw Error("cannot open gallery manifest in " + directory);

  Gallery g;
  std::string line;
  int line_no = 0;
  bool saw_version = false;
  while (std::getline(manifest, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "version") {
      int v;
      if (!(ls >> v) || v != 1) throw ParseError("unsupported gallery version", line_no);
      saw_version = true;
    } else if (key == "theta_u") {
      double t;
      if (!(ls >> t)) throw ParseError("bad theta_u", line_no);
      g.set_rejection_threshold(t);
    } else if (key == "identity") {
      std::string name, filename;
      if (!(ls >> name >> filename)) {
        throw ParseError("identity line needs a name and a file", line_no);
      }
      std::ifstream in(fs::path(directory) / filename, std::ios::binary);
      if (!in) throw Error("cannot open descriptor file " + filename);
      char magic[4];
      in.read(magic, 4);
      if (!in || std::memcmp(magic, "LBPG", 4) != 0) {
        throw Error("bad magic in " + filename);
      }
      if (read_u32(in) != 1) throw Error("unsupported version in " + filename);
      const std::uint32_t count = read_u32(in);
      for (std::uint32_t i = 0; i < count; ++i) {
        LbpDescriptor d(kDescriptorDims);
        in.read(reinterpret_cast<char*>(d.data()),
                static_cast<std::streamsize>(d.size() * sizeof(double)));
        if (!in) throw Error("truncated descriptor file " + filename);
        g.enroll(name, std::move(d));
      }
    } else {
      throw ParseError("unknown manifest key: " + key, line_no);
    }
  }
  if (!saw_version) throw Error("gallery manifest lacks a version line");
  return g;
}

}  // namespace sociocue
