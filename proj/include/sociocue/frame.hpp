#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace sociocue {

// One grayscale video frame. Data is row-major, 8 bits per pixel.
// Frames are immutable values once produced; copying is explicit and cheap
// enough for the frame sizes this engine handles.
struct Frame {
  int width = 0;
  int height = 0;
  std::int64_t timestamp_ms = 0;
  std::vector<std::uint8_t> data;

  static Frame filled(int width, int height, std::uint8_t value,
                      std::int64_t timestamp_ms = 0) {
    Frame f;
    f.width = width;
    f.height = height;
    f.timestamp_ms = timestamp_ms;
    f.data.assign(static_cast<std::size_t>(width) * height, value);
    return f;
  }

  bool structurally_valid() const {
    return width >= 32 && height >= 32 &&
           data.size() == static_cast<std::size_t>(width) * height;
  }

  bool same_size(const Frame& other) const {
    return width == other.width && height == other.height;
  }

  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  // Bilinear sample with replicated borders.
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
    const double bot = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
    return (1.0 - fy) * top + fy * bot;
  }
};

}  // namespace sociocue
