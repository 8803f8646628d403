#include "designpipe/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "designpipe/error.hpp"

namespace designpipe {

RasterImage::RasterImage(int width, int height, std::array<uint8_t, 4> fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kInputError, "raster dimensions must be positive");
  }
  pixels_.resize(static_cast<size_t>(width) * height * 4);
  for (size_t i = 0; i < pixels_.size(); i += 4) {
    std::memcpy(&pixels_[i], fill.data(), 4);
  }
}

RasterImage RasterImage::from_pixels(int width, int height, std::vector<uint8_t> pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != static_cast<size_t>(width) * height * 4) {
    throw Error(ErrorKind::kInputError, "pixel buffer does not match raster dimensions");
  }
  RasterImage out;
  out.width_ = width;
  out.height_ = height;
  out.pixels_ = std::move(pixels);
  return out;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
  std::span<const uint8_t> bytes;
  size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep data, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(data, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

[[noreturn]] void png_error_throw(png_structp, png_const_charp msg) {
  throw Error(ErrorKind::kMalformedSyntax, std::string("PNG: ") + msg);
}

void png_warning_ignore(png_structp, png_const_charp) {}

uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::vector<uint8_t> encode_png(const RasterImage& image) {
  if (image.empty()) throw Error(ErrorKind::kInputError, "cannot encode an empty raster");
  std::vector<uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw,
                                            png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGBA,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const auto px = image.pixels();
    for (int y = 0; y < image.height(); ++y) {
      png_write_row(png, const_cast<png_bytep>(px.data() + static_cast<size_t>(y) * image.width() * 4));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

RasterImage decode_png(std::span<const uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorKind::kMalformedSyntax, "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_throw,
                                           png_warning_ignore);
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{bytes, 0};
  try {
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS)) {
      png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<size_t>(w) * 4) {
      png_error(png, "unsupported pixel layout");
    }
    std::vector<uint8_t> pixels(static_cast<size_t>(w) * h * 4);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<size_t>(y) * w * 4;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return RasterImage::from_pixels(w, h, std::move(pixels));
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

void sample_bilinear(const RasterImage& src, double u, double v, uint8_t out[4]) {
  const double max_x = src.width() - 1;
  const double max_y = src.height() - 1;
  u = std::clamp(u, 0.0, max_x);
  v = std::clamp(v, 0.0, max_y);
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, src.width() - 1);
  const int y1 = std::min(y0 + 1, src.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const uint8_t* p00 = src.at(x0, y0);
  const uint8_t* p10 = src.at(x1, y0);
  const uint8_t* p01 = src.at(x0, y1);
  const uint8_t* p11 = src.at(x1, y1);
  for (int c = 0; c < 4; ++c) {
    const double top = p00[c] + (p10[c] - p00[c]) * fx;
    const double bottom = p01[c] + (p11[c] - p01[c]) * fx;
    out[c] = to_byte(top + (bottom - top) * fy);
  }
}

RasterImage resize_bilinear(const RasterImage& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  RasterImage dst(width, height);
  const double sw = src.width();
  const double sh = src.height();
  for (int y = 0; y < height; ++y) {
    const double v = (y + 0.5) * sh / height - 0.5;
    for (int x = 0; x < width; ++x) {
      sample_bilinear(src, (x + 0.5) * sw / width - 0.5, v, dst.at(x, y));
    }
  }
  return dst;
}

RasterImage crop(const RasterImage& src, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width <= 0 || height <= 0 || x + width > src.width() ||
      y + height > src.height()) {
    throw Error(ErrorKind::kInputError, "crop rectangle outside the image");
  }
  RasterImage dst(width, height);
  for (int row = 0; row < height; ++row) {
    std::memcpy(dst.at(0, row), src.at(x, y + row), static_cast<size_t>(width) * 4);
  }
  return dst;
}

RasterImage fit_to_canvas(const RasterImage& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  // Compare aspect ratios in integers to keep the crop exact.
  const int64_t lhs = static_cast<int64_t>(src.width()) * height;
  const int64_t rhs = static_cast<int64_t>(width) * src.height();
  RasterImage cropped;
  if (lhs > rhs) {
    const int crop_w = std::max<int>(
        1, static_cast<int>(std::lround(static_cast<double>(src.height()) * width / height)));
    cropped = crop(src, (src.width() - crop_w) / 2, 0, crop_w, src.height());
  } else if (lhs < rhs) {
    const int crop_h = std::max<int>(
        1, static_cast<int>(std::lround(static_cast<double>(src.width()) * height / width)));
    cropped = crop(src, 0, (src.height() - crop_h) / 2, src.width(), crop_h);
  } else {
    cropped = src;
  }
  return resize_bilinear(cropped, width, height);
}

void blend_over(uint8_t* dst, const uint8_t src_rgb[3], uint8_t alpha) {
  if (alpha == 0) return;
  if (alpha == 255) {
    dst[0] = src_rgb[0];
    dst[1] = src_rgb[1];
    dst[2] = src_rgb[2];
    dst[3] = 255;
    return;
  }
  const int sa = alpha;
  const int da = dst[3];
  if (da == 255) {
    for (int c = 0; c < 3; ++c) {
      dst[c] = static_cast<uint8_t>((src_rgb[c] * sa + dst[c] * (255 - sa) + 127) / 255);
    }
    return;
  }
  // General straight-alpha source-over.
  const double a_s = sa / 255.0;
  const double a_d = da / 255.0;
  const double a_o = a_s + a_d * (1.0 - a_s);
  for (int c = 0; c < 3; ++c) {
    const double v = (src_rgb[c] * a_s + dst[c] * a_d * (1.0 - a_s)) / a_o;
    dst[c] = to_byte(v);
  }
  dst[3] = to_byte(a_o * 255.0);
}

}  // namespace designpipe
