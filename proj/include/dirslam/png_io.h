#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dirslam {

struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<uint16_t> data;  // row-major
};

struct ImageRgb8 {
  int width = 0;
  int height = 0;
  std::vector<std::array<uint8_t, 3>> data;  // row-major
};

// 16-bit grayscale PNG (the TUM RGB-D depth encoding). Throws on I/O or
// format errors.
Image16 read_png16(const std::string& path);
void write_png16(const std::string& path, const Image16& img);

// 8-bit RGB PNG; grayscale and paletted inputs are expanded on read.
ImageRgb8 read_png_rgb8(const std::string& path);
void write_png_rgb8(const std::string& path, const ImageRgb8& img);

}  // namespace dirslam
