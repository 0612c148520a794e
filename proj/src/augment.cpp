#include "spin/augment.hpp"

#include <cmath>
#include <vector>

#include "spin/tensor.hpp"

namespace spin {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct RotMap {
  double cx, cy, cos_t, sin_t;

  // Inverse-map output pixel (x, y) to source coordinates.
  void source(int x, int y, double& sx, double& sy) const {
    const double dx = x - cx;
    const double dy = y - cy;
    sx = cx + cos_t * dx + sin_t * dy;
    sy = cy - sin_t * dx + cos_t * dy;
  }
};

RotMap make_map(int H, int W, double deg) {
  const double rad = deg * kPi / 180.0;
  return RotMap{(W - 1) / 2.0, (H - 1) / 2.0, std::cos(rad), std::sin(rad)};
}

template <typename F>
void flip_h(F* p, int H, int W) {
  for (int i = 0; i < H; ++i) {
    F* row = p + static_cast<long long>(i) * W;
    for (int j = 0; j < W / 2; ++j) std::swap(row[j], row[W - 1 - j]);
  }
}

template <typename F>
void flip_v(F* p, int H, int W) {
  for (int i = 0; i < H / 2; ++i) {
    F* a = p + static_cast<long long>(i) * W;
    F* b = p + static_cast<long long>(H - 1 - i) * W;
    for (int j = 0; j < W; ++j) std::swap(a[j], b[j]);
  }
}

}  // namespace

void rotate_plane_bilinear(const float* src, float* dst, int H, int W, double deg) {
  const RotMap m = make_map(H, W, deg);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double sx, sy;
      m.source(x, y, sx, sy);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0;
      const double fy = sy - y0;
      auto sample = [&](int yy, int xx) -> double {
        if (xx < 0 || xx >= W || yy < 0 || yy >= H) return 0.0;
        return src[static_cast<long long>(yy) * W + xx];
      };
      const double v = (1.0 - fy) * ((1.0 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                       fy * ((1.0 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
      dst[static_cast<long long>(y) * W + x] = static_cast<float>(v);
    }
  }
}

void rotate_plane_nearest(const uint8_t* src, uint8_t* dst, int H, int W, double deg) {
  const RotMap m = make_map(H, W, deg);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double sx, sy;
      m.source(x, y, sx, sy);
      const int xx = static_cast<int>(std::lround(sx));
      const int yy = static_cast<int>(std::lround(sy));
      dst[static_cast<long long>(y) * W + x] =
          (xx >= 0 && xx < W && yy >= 0 && yy < H) ? src[static_cast<long long>(yy) * W + xx]
                                                   : 0;
    }
  }
}

SliceWindow augment(const SliceWindow& w, Rng& rng, double p) {
  check(p >= 0.0 && p <= 1.0, "augment: probability must be in [0,1]");
  if (!rng.bernoulli(p)) return w;

  SliceWindow out = w;
  const int H = w.H, W = w.W;
  const long long se = static_cast<long long>(H) * W;

  const bool hflip = rng.bernoulli(0.5);
  const bool vflip = rng.bernoulli(0.5);
  const double deg = rng.uniform(-30.0, 30.0);

  if (hflip) {
    for (int s = 0; s < out.c; ++s) flip_h(out.x.data() + s * se, H, W);
    if (!out.ybar.empty()) flip_h(out.ybar.data(), H, W);
  }
  if (vflip) {
    for (int s = 0; s < out.c; ++s) flip_v(out.x.data() + s * se, H, W);
    if (!out.ybar.empty()) flip_v(out.ybar.data(), H, W);
  }

  std::vector<float> tmp(se);
  for (int s = 0; s < out.c; ++s) {
    rotate_plane_bilinear(out.x.data() + s * se, tmp.data(), H, W, deg);
    std::copy(tmp.begin(), tmp.end(), out.x.begin() + s * se);
  }
  if (!out.ybar.empty()) {
    std::vector<uint8_t> ltmp(se);
    rotate_plane_nearest(out.ybar.data(), ltmp.data(), H, W, deg);
    out.ybar.assign(ltmp.begin(), ltmp.end());
  }

  add_gaussian_noise(out.x, rng, 0.01);
  return out;
}

void add_gaussian_noise(std::vector<float>& values, Rng& rng, double sigma) {
  for (auto& v : values) v += static_cast<float>(sigma * rng.gaussian());
}

}  // namespace spin
