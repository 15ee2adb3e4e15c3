#include "dirslam/png_io.h"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace dirslam {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void open_reader(PngReader& r, FILE* f, const std::string& path) {
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw std::runtime_error("png_create_read_struct failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("png read error: " + path);
  png_init_io(r.png, f);
  png_read_info(r.png, r.info);
}

}  // namespace

Image16 read_png16(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path);
  PngReader r;
  open_reader(r, f.get(), path);

  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("png read error: " + path);
  const int depth = png_get_bit_depth(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    throw std::runtime_error(path + ": expected 16-bit grayscale PNG");
  }
  png_set_swap(r.png);  // PNG stores big-endian samples

  Image16 img;
  img.width = static_cast<int>(png_get_image_width(r.png, r.info));
  img.height = static_cast<int>(png_get_image_height(r.png, r.info));
  img.data.resize(static_cast<size_t>(img.width) * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(img.data.data() + static_cast<size_t>(y) * img.width);
  }
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_png16(const std::string& path, const Image16& img) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw std::runtime_error("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("png write error: " + path);

  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  png_set_swap(w.png);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(w.png, reinterpret_cast<png_const_bytep>(
                             img.data.data() + static_cast<size_t>(y) * img.width));
  }
  png_write_end(w.png, nullptr);
}

ImageRgb8 read_png_rgb8(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path);
  PngReader r;
  open_reader(r, f.get(), path);
  if (setjmp(png_jmpbuf(r.png))) throw std::runtime_error("png read error: " + path);

  png_set_strip_16(r.png);
  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  png_set_strip_alpha(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);

  ImageRgb8 img;
  img.width = static_cast<int>(png_get_image_width(r.png, r.info));
  img.height = static_cast<int>(png_get_image_height(r.png, r.info));
  if (png_get_rowbytes(r.png, r.info) != static_cast<size_t>(img.width) * 3) {
    throw std::runtime_error(path + ": unexpected row size after RGB expansion");
  }
  img.data.resize(static_cast<size_t>(img.width) * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(img.data.data() + static_cast<size_t>(y) * img.width);
  }
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

void write_png_rgb8(const std::string& path, const ImageRgb8& img) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!w.png) throw std::runtime_error("png_create_write_struct failed");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw std::runtime_error("png_create_info_struct failed");
  if (setjmp(png_jmpbuf(w.png))) throw std::runtime_error("png write error: " + path);

  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(w.png, reinterpret_cast<png_const_bytep>(
                             img.data.data() + static_cast<size_t>(y) * img.width));
  }
  png_write_end(w.png, nullptr);
}

}  // namespace dirslam
