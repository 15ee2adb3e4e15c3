#include "dirslam/frame.h"

#include <algorithm>
#include <cmath>

namespace dirslam {

double ImageF::bilinear(double u, double v) const {
  const int x0 = std::clamp(static_cast<int>(u), 0, width - 2);
  const int y0 = std::clamp(static_cast<int>(v), 0, height - 2);
  const double a = u - x0;
  const double b = v - y0;
  const double v00 = at(x0, y0), v10 = at(x0 + 1, y0);
  const double v01 = at(x0, y0 + 1), v11 = at(x0 + 1, y0 + 1);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

double ImageF::bilinear_with_grad(double u, double v, double& du, double& dv) const {
  const int x0 = std::clamp(static_cast<int>(u), 0, width - 2);
  const int y0 = std::clamp(static_cast<int>(v), 0, height - 2);
  const double a = u - x0;
  const double b = v - y0;
  const double v00 = at(x0, y0), v10 = at(x0 + 1, y0);
  const double v01 = at(x0, y0 + 1), v11 = at(x0 + 1, y0 + 1);
  du = (1 - b) * (v10 - v00) + b * (v11 - v01);
  dv = (1 - a) * (v01 - v00) + a * (v11 - v10);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

void finalize_frame(Frame& frame) {
  for (float& z : frame.depth.data) {
    if (!(z >= 0.1f && z <= 10.f)) z = 0.f;
  }
  const int w = frame.intensity.width, h = frame.intensity.height;
  frame.grad_mag = ImageF(w, h, 0.f);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const float gx = 0.5f * (frame.intensity.at(x + 1, y) - frame.intensity.at(x - 1, y));
      const float gy = 0.5f * (frame.intensity.at(x, y + 1) - frame.intensity.at(x, y - 1));
      frame.grad_mag.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
}

Frame downsample(const Frame& frame) {
  Frame out;
  out.timestamp = frame.timestamp;
  out.intrinsics = frame.intrinsics.half();
  const int w = out.intrinsics.width, h = out.intrinsics.height;
  out.intensity = ImageF(w, h);
  out.depth = ImageF(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.intensity.at(x, y) =
          0.25f * (frame.intensity.at(2 * x, 2 * y) + frame.intensity.at(2 * x + 1, 2 * y) +
                   frame.intensity.at(2 * x, 2 * y + 1) + frame.intensity.at(2 * x + 1, 2 * y + 1));
      out.depth.at(x, y) = frame.depth.at(2 * x, 2 * y);
    }
  }
  finalize_frame(out);
  return out;
}

}  // namespace dirslam
