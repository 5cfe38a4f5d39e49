#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "cxrs/error.hpp"
#include "cxrs/image.hpp"
#include "cxrs/rng.hpp"

namespace cxrs {

// Stochastic training-time transform magnitudes. All-zero magnitudes (and
// hflip_prob 0, zoom_range {1,1}) make apply() the bit-exact identity.
struct AugmentConfig {
  double max_translate_frac = 0.10;
  double max_rotate_deg = 10.0;
  double hflip_prob = 0.5;
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;
  double max_intensity_shift = 0.10;
  double cutout_frac = 0.25;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;

  static AugmentConfig identity() {
    AugmentConfig c;
    c.max_translate_frac = 0.0;
    c.max_rotate_deg = 0.0;
    c.hflip_prob = 0.0;
    c.zoom_lo = 1.0;
    c.zoom_hi = 1.0;
    c.max_intensity_shift = 0.0;
    c.cutout_frac = 0.0;
    c.noise_sigma = 0.0;
    return c;
  }

  void validate() const {
    if (!(max_translate_frac >= 0.0 && max_translate_frac <= 1.0)) {
      throw ValidationError("max_translate_frac must be in [0,1]");
    }
    if (!(max_rotate_deg >= 0.0)) throw ValidationError("max_rotate_deg must be >= 0");
    if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) {
      throw ValidationError("hflip_prob must be in [0,1]");
    }
    if (!(zoom_lo > 0.0 && zoom_lo <= zoom_hi)) {
      throw ValidationError("zoom_range needs 0 < lo <= hi");
    }
    if (!(max_intensity_shift >= 0.0)) {
      throw ValidationError("max_intensity_shift must be >= 0");
    }
    if (!(cutout_frac >= 0.0 && cutout_frac < 1.0)) {
      throw ValidationError("cutout_frac must be in [0,1)");
    }
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  }
};

// Whole-pixel shift; pixels pushed past the border are replaced by edge
// replication on the opposite side.
inline Image translate_image(const Image& img, long dx, long dy) {
  if (dx == 0 && dy == 0) return img;
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    const long sy = std::clamp<long>(y - dy, 0, img.height - 1);
    for (int x = 0; x < img.width; ++x) {
      const long sx = std::clamp<long>(x - dx, 0, img.width - 1);
      out.at(x, y) = img.at(static_cast<int>(sx), static_cast<int>(sy));
    }
  }
  return out;
}

// Content rotation about the image centre (positive = counter-clockwise with
// y pointing down); bilinear sampling with edge replication.
inline Image rotate_image(const Image& img, double degrees) {
  if (degrees == 0.0) return img;
  const double rad = degrees * std::acos(-1.0) / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double rx = x - cx, ry = y - cy;
      const double sx = cx + c * rx + s * ry;
      const double sy = cy - s * rx + c * ry;
      out.at(x, y) = detail::sample_bilinear_clamped(img, sx, sy);
    }
  }
  return out;
}

inline Image hflip_image(const Image& img) {
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y) = img.at(img.width - 1 - x, y);
    }
  }
  return out;
}

// Magnification about the centre; factor > 1 enlarges content, factor < 1
// shrinks it with edge replication filling the revealed border.
inline Image zoom_image(const Image& img, double factor) {
  if (!(factor > 0.0)) throw ValidationError("zoom factor must be > 0");
  if (factor == 1.0) return img;
  const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double sx = cx + (x - cx) / factor;
      const double sy = cy + (y - cy) / factor;
      out.at(x, y) = detail::sample_bilinear_clamped(img, sx, sy);
    }
  }
  return out;
}

inline Image shift_intensity(const Image& img, double delta) {
  if (delta == 0.0) return img;
  Image out = img;
  for (double& v : out.pixels) v = std::clamp(v + delta, 0.0, 1.0);
  return out;
}

inline Image cutout_image(const Image& img, int x0, int y0, int box_w, int box_h,
                          double fill = 0.5) {
  if (box_w < 0 || box_h < 0 || x0 < 0 || y0 < 0 || x0 + box_w > img.width ||
      y0 + box_h > img.height) {
    throw ValidationError("cutout box outside the image");
  }
  Image out = img;
  for (int y = y0; y < y0 + box_h; ++y) {
    for (int x = x0; x < x0 + box_w; ++x) out.at(x, y) = fill;
  }
  return out;
}

inline Image add_gaussian_noise(const Image& img, double sigma, Rng& rng) {
  if (sigma == 0.0) return img;
  Image out = img;
  for (double& v : out.pixels) v = std::clamp(v + rng.normal(0.0, sigma), 0.0, 1.0);
  return out;
}

// Deterministic single-transform dispatch, mainly for exercising each
// transform in isolation.
struct TransformParams {
  long dx = 0, dy = 0;            // translate
  double degrees = 0.0;           // rotate
  double factor = 1.0;            // zoom
  double delta = 0.0;             // intensity
  int x0 = 0, y0 = 0;             // cutout box origin
  int box_w = 0, box_h = 0;       // cutout box size
  double fill = 0.5;              // cutout fill
  double sigma = 0.0;             // noise
  std::uint64_t noise_seed = 0;   // noise stream
};

inline Image transform_single(const std::string& kind, const TransformParams& p,
                              const Image& img) {
  if (kind == "translate") return translate_image(img, p.dx, p.dy);
  if (kind == "rotate") return rotate_image(img, p.degrees);
  if (kind == "hflip") return hflip_image(img);
  if (kind == "zoom") return zoom_image(img, p.factor);
  if (kind == "intensity_shift") return shift_intensity(img, p.delta);
  if (kind == "cutout") return cutout_image(img, p.x0, p.y0, p.box_w, p.box_h, p.fill);
  if (kind == "noise") {
    Rng rng(p.noise_seed);
    return add_gaussian_noise(img, p.sigma, rng);
  }
  throw ValidationError("unknown transform kind '" + kind + "'");
}

namespace detail {

struct AugmentDraw {
  long dx = 0, dy = 0;
  double degrees = 0.0;
  bool flip = false;
  double factor = 1.0;
  double delta = 0.0;
  int cut_x0 = 0, cut_y0 = 0, cut_side = 0;
};

// All scalar parameters are drawn in a fixed order regardless of their
// magnitudes, so zeroing one transform does not shift the others' draws.
inline AugmentDraw draw_augment_params(const AugmentConfig& cfg, int width, int height,
                                       Rng& rng) {
  AugmentDraw d;
  d.dx = std::llround(rng.uniform(-cfg.max_translate_frac, cfg.max_translate_frac) * width);
  d.dy = std::llround(rng.uniform(-cfg.max_translate_frac, cfg.max_translate_frac) * height);
  d.degrees = rng.uniform(-cfg.max_rotate_deg, cfg.max_rotate_deg);
  d.flip = rng.uniform01() < cfg.hflip_prob;
  d.factor = rng.uniform(cfg.zoom_lo, cfg.zoom_hi);
  d.delta = rng.uniform(-cfg.max_intensity_shift, cfg.max_intensity_shift);

  const double area = rng.uniform01() * cfg.cutout_frac * width * height;
  d.cut_side = static_cast<int>(std::llround(std::sqrt(area)));
  d.cut_side = std::min({d.cut_side, width, height});
  d.cut_x0 = static_cast<int>(rng.uniform_index(width - d.cut_side + 1));
  d.cut_y0 = static_cast<int>(rng.uniform_index(height - d.cut_side + 1));
  return d;
}

}  // namespace detail

// Random composition in the fixed order translate, rotate, hflip, zoom,
// intensity shift, cutout, noise. Output is clamped to [0,1].
inline Image apply_augmentations(const Image& img, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  for (double v : img.pixels) {
    if (!std::isfinite(v)) throw ValidationError("augmentation input has non-finite pixels");
  }

  const detail::AugmentDraw d = detail::draw_augment_params(cfg, img.width, img.height, rng);
  Image out = translate_image(img, d.dx, d.dy);
  out = rotate_image(out, d.degrees);
  if (d.flip) out = hflip_image(out);
  out = zoom_image(out, d.factor);
  out = shift_intensity(out, d.delta);
  out = cutout_image(out, d.cut_x0, d.cut_y0, d.cut_side, d.cut_side);
  out = add_gaussian_noise(out, cfg.noise_sigma, rng);
  for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace cxrs
