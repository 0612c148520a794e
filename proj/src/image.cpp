#include "spin/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spin/config.hpp"
#include "spin/tensor.hpp"

namespace spin {

namespace {

uint8_t quantize(float v) {
  v = std::min(1.0f, std::max(0.0f, v));
  return static_cast<uint8_t>(std::lround(v * 255.0f));
}

}  // namespace

void write_pgm(const std::string& path, const float* values, int H, int W) {
  std::ostringstream os;
  os << "P5\n" << W << " " << H << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + static_cast<size_t>(H) * W);
  for (long long i = 0; i < static_cast<long long>(H) * W; ++i)
    out.push_back(static_cast<char>(quantize(values[i])));
  write_file_atomic(path, out);
}

void write_overlay_ppm(const std::string& path, const float* slice, const uint8_t* mask, int H,
                       int W) {
  auto on = [&](int y, int x) {
    return y >= 0 && y < H && x >= 0 && x < W && mask[static_cast<long long>(y) * W + x] != 0;
  };
  std::ostringstream os;
  os << "P6\n" << W << " " << H << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + static_cast<size_t>(H) * W * 3);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const bool contour = on(y, x) && (!on(y - 1, x) || !on(y + 1, x) || !on(y, x - 1) ||
                                        !on(y, x + 1));
      const uint8_t g = quantize(slice[static_cast<long long>(y) * W + x]);
      if (contour) {
        out.push_back(static_cast<char>(255));
        out.push_back(0);
        out.push_back(0);
      } else {
        out.push_back(static_cast<char>(g));
        out.push_back(static_cast<char>(g));
        out.push_back(static_cast<char>(g));
      }
    }
  }
  write_file_atomic(path, out);
}

void write_feature_grid_pgm(const std::string& path, const std::vector<const float*>& planes,
                            int H, int W) {
  check(!planes.empty(), "feature grid: no planes");
  const int n = static_cast<int>(planes.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const int GW = cols * (W + 1) - 1;
  const int GH = rows * (H + 1) - 1;
  std::vector<float> grid(static_cast<size_t>(GH) * GW, 0.0f);
  for (int k = 0; k < n; ++k) {
    float lo = planes[k][0], hi = planes[k][0];
    for (long long i = 0; i < static_cast<long long>(H) * W; ++i) {
      lo = std::min(lo, planes[k][i]);
      hi = std::max(hi, planes[k][i]);
    }
    const float scale = hi > lo ? 1.0f / (hi - lo) : 0.0f;
    const int r0 = (k / cols) * (H + 1);
    const int c0 = (k % cols) * (W + 1);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        grid[static_cast<long long>(r0 + y) * GW + c0 + x] =
            (planes[k][static_cast<long long>(y) * W + x] - lo) * scale;
  }
  write_pgm(path, grid.data(), GH, GW);
}

}  // namespace spin
