#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dirslam/camera.h"

namespace dirslam {

// Dense single-channel float image.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int w, int h, float fill = 0.f) : width(w), height(h), data(w * h, fill) {}

  float at(int x, int y) const { return data[y * width + x]; }
  float& at(int x, int y) { return data[y * width + x]; }
  bool empty() const { return data.empty(); }

  // Bilinear interpolation in double precision; caller must keep (u, v)
  // inside [0, width-1] x [0, height-1].
  double bilinear(double u, double v) const;

  // Bilinear value plus its analytic derivative with respect to (u, v).
  // The derivative is that of the interpolant itself, so finite differences
  // of bilinear() reproduce it to machine precision inside a pixel cell.
  double bilinear_with_grad(double u, double v, double& du, double& dv) const;
};

// One RGB-D frame. Depth is in meters with 0 marking invalid pixels; valid
// range is clamped to [0.1, 10]. Intensity lives in [0, 1].
struct Frame {
  double timestamp = 0.0;
  Intrinsics intrinsics;
  ImageF intensity;
  ImageF depth;
  std::vector<std::array<uint8_t, 3>> rgb;  // optional, row-major, may be empty
  ImageF grad_mag;                          // ||grad I||_2, central differences

  bool depth_valid(int x, int y) const {
    const float z = depth.at(x, y);
    return z > 0.f;
  }
};

// Clamps depth to the valid range and computes the gradient-magnitude image.
void finalize_frame(Frame& frame);

// 2x2 decimation: intensity box-filtered, depth subsampled (no averaging
// across discontinuities), gradients recomputed.
Frame downsample(const Frame& frame);

}  // namespace dirslam
