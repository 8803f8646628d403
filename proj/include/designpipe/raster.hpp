#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace designpipe {

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major RGBA, 8 bits per channel, straight (non-premultiplied) alpha.
class RasterImage {
public:
  RasterImage() = default;
  RasterImage(int width, int height, std::array<uint8_t, 4> fill = {0, 0, 0, 0});
  // Takes ownership of a width*height*4 RGBA buffer.
  static RasterImage from_pixels(int width, int height, std::vector<uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const uint8_t> pixels() const noexcept { return pixels_; }
  std::span<uint8_t> pixels() noexcept { return pixels_; }

  uint8_t* at(int x, int y) { return &pixels_[(static_cast<size_t>(y) * width_ + x) * 4]; }
  const uint8_t* at(int x, int y) const {
    return &pixels_[(static_cast<size_t>(y) * width_ + x) * 4];
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> pixels_;
};

std::vector<uint8_t> encode_png(const RasterImage& image);
RasterImage decode_png(std::span<const uint8_t> bytes);

// Bilinear sample at continuous source coordinates (pixel centers at integer
// positions), clamped to the edge. Writes 4 channels to `out`.
void sample_bilinear(const RasterImage& src, double u, double v, uint8_t out[4]);

RasterImage resize_bilinear(const RasterImage& src, int width, int height);
RasterImage crop(const RasterImage& src, int x, int y, int width, int height);

// Center-crops `src` to the target aspect ratio, then scales to the target
// size. Returns a copy when the size already matches.
RasterImage fit_to_canvas(const RasterImage& src, int width, int height);

// Source-over of a straight-alpha color onto one destination pixel.
// `alpha` is the effective source alpha (coverage x opacity x color alpha).
void blend_over(uint8_t* dst, const uint8_t src_rgb[3], uint8_t alpha);

}  // namespace designpipe
