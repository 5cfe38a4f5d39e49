#pragma once

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <string>
#include <vector>

#include "cxrs/error.hpp"
#include "cxrs/image.hpp"

namespace cxrs {

// Decodes an 8- or 16-bit grayscale PNG into [0, 1] intensities (raw code
// values divided by the max code value, no gamma handling). Color input is
// converted by luminance average across channels; when that happens and
// `warning` is non-null, a note is stored there.
inline Image load_png(const std::string& path, std::string* warning = nullptr) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open '" + path + "' for reading");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng allocation failed");
  }

  // setjmp region: no locals with destructors live across the jump.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("'" + path + "' is not a decodable PNG");
  }

  png_init_io(png, fp);
  png_read_png(png, info,
               PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA,
               nullptr);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  png_bytepp rows = png_get_rows(png, info);

  const int channels =
      (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA) ? 3 : 1;
  const double max_code = bit_depth == 16 ? 65535.0 : 255.0;

  Image img(static_cast<int>(width), static_cast<int>(height));
  for (png_uint_32 y = 0; y < height; ++y) {
    const png_bytep row = rows[y];
    for (png_uint_32 x = 0; x < width; ++x) {
      double sum = 0.0;
      for (int c = 0; c < channels; ++c) {
        const std::size_t s = (static_cast<std::size_t>(x) * channels + c);
        if (bit_depth == 16) {
          sum += static_cast<double>((row[2 * s] << 8) | row[2 * s + 1]);  // big-endian
        } else {
          sum += static_cast<double>(row[s]);
        }
      }
      img.at(static_cast<int>(x), static_cast<int>(y)) = sum / (channels * max_code);
    }
  }

  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  if (channels == 3 && warning) {
    *warning = "'" + path + "' is not grayscale; converted by luminance average";
  }
  return img;
}

// Writes a grayscale PNG at 8 or 16 bits. Intensities are clamped to [0, 1]
// and quantized by rounding to the max code value.
inline void save_png(const std::string& path, const Image& img, int bit_depth = 16) {
  if (img.empty()) throw ValidationError("cannot save an empty image");
  if (bit_depth != 8 && bit_depth != 16) {
    throw ValidationError("PNG bit depth must be 8 or 16, got " + std::to_string(bit_depth));
  }

  const double max_code = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t bytes_per_px = bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> data(img.size() * bytes_per_px);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[y] = data.data() + static_cast<std::size_t>(y) * img.width * bytes_per_px;
    for (int x = 0; x < img.width; ++x) {
      const double v = std::clamp(img.at(x, y), 0.0, 1.0);
      const auto code = static_cast<unsigned>(std::lround(v * max_code));
      if (bit_depth == 16) {
        rows[y][2 * x] = static_cast<png_byte>(code >> 8);
        rows[y][2 * x + 1] = static_cast<png_byte>(code & 0xff);
      } else {
        rows[y][x] = static_cast<png_byte>(code);
      }
    }
  }

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open '" + path + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng allocation failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("failed to write PNG '" + path + "'");
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);

  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace cxrs
