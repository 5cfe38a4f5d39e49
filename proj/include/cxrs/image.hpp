#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cxrs/error.hpp"

namespace cxrs {

// Row-major grayscale pixel grid with intensities in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // height * width, row-major

  Image() = default;
  Image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) {
      throw ValidationError("image dimensions must be positive, got " +
                            std::to_string(w) + "x" + std::to_string(h));
    }
  }

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }

  bool operator==(const Image& other) const = default;
};

// Removes floor(fraction * dimension) pixels from each of the four sides.
inline Image crop_borders(const Image& src, double fraction) {
  if (!(fraction >= 0.0 && fraction < 0.5)) {
    throw ValidationError("crop fraction " + std::to_string(fraction) +
                          " outside [0, 0.5)");
  }
  const int dx = static_cast<int>(std::floor(fraction * src.width));
  const int dy = static_cast<int>(std::floor(fraction * src.height));
  const int new_w = src.width - 2 * dx;
  const int new_h = src.height - 2 * dy;
  if (new_w < 1 || new_h < 1) {
    throw ValidationError("crop fraction " + std::to_string(fraction) +
                          " empties a " + std::to_string(src.width) + "x" +
                          std::to_string(src.height) + " image");
  }
  if (dx == 0 && dy == 0) return src;

  Image out(new_w, new_h);
  for (int y = 0; y < new_h; ++y) {
    const double* row = &src.pixels[static_cast<std::size_t>(y + dy) * src.width + dx];
    std::copy(row, row + new_w, &out.pixels[static_cast<std::size_t>(y) * new_w]);
  }
  return out;
}

namespace detail {

// Corner-aligned source coordinate for target index i: the first and last
// output samples land exactly on the first and last input samples.
inline double corner_aligned_coord(int i, int target_dim, int src_dim) {
  if (target_dim == 1) return 0.5 * (src_dim - 1);
  return static_cast<double>(i) * (static_cast<double>(src_dim - 1) /
                                   static_cast<double>(target_dim - 1));
}

// Bilinear sample with coordinates clamped to the grid (edge replication).
inline double sample_bilinear_clamped(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

// Corner-aligned bilinear resize. Output values stay inside the source value
// range; resizing to the source dimensions returns the identical grid.
inline Image resize_bilinear(const Image& src, int target_width, int target_height) {
  if (src.empty()) throw ValidationError("cannot resize an empty image");
  if (target_width < 1 || target_height < 1) {
    throw ValidationError("resize target " + std::to_string(target_width) + "x" +
                          std::to_string(target_height) + " must be positive");
  }
  if (target_width == src.width && target_height == src.height) return src;

  Image out(target_width, target_height);
  for (int y = 0; y < target_height; ++y) {
    const double sy = detail::corner_aligned_coord(y, target_height, src.height);
    for (int x = 0; x < target_width; ++x) {
      const double sx = detail::corner_aligned_coord(x, target_width, src.width);
      out.at(x, y) = detail::sample_bilinear_clamped(src, sx, sy);
    }
  }
  return out;
}

inline void clamp_unit(Image& img) {
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
}

}  // namespace cxrs
