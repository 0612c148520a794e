#include "spin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "spin/tensor.hpp"

namespace spin {

namespace {

constexpr double kTau = 6.28318530717958647692;

struct Ellipse {
  double cx, cy, rx, ry;

  bool contains(int x, int y) const {
    const double u = (x - cx) / rx;
    const double v = (y - cy) / ry;
    return u * u + v * v <= 1.0;
  }
};

}  // namespace

void SynthSpec::validate() const {
  check(C >= 1 && H >= 8 && W >= 8, "synth: volume extents too small");
  check(lesions_per_slice >= 0, "synth: negative lesion count");
  check(small_lesion_fraction >= 0.0 && small_lesion_fraction <= 1.0,
        "synth: small_lesion_fraction must be in [0,1]");
  check(small_area_min >= 1 && small_area_min <= small_area_max,
        "synth: bad small lesion area range");
  check(large_area_min >= 1 && large_area_min <= large_area_max,
        "synth: bad large lesion area range");
}

Volume generate_synthetic_volume(Rng& rng, const SynthSpec& spec, const std::string& id) {
  spec.validate();
  const int C = spec.C, H = spec.H, W = spec.W;
  const long long se = static_cast<long long>(H) * W;

  Volume v;
  v.id = id;
  v.C = C;
  v.H = H;
  v.W = W;
  v.intensities.assign(static_cast<size_t>(C) * se, 0.0f);
  v.labels.assign(static_cast<size_t>(C) * se, 0);

  const Ellipse tissue{W / 2.0 + rng.uniform(-0.03, 0.03) * W,
                       H / 2.0 + rng.uniform(-0.03, 0.03) * H,
                       rng.uniform(0.34, 0.42) * W, rng.uniform(0.34, 0.42) * H};

  // Low-frequency texture parameters, shared by every slice of the volume.
  const double fx = rng.uniform(0.5, 1.5), px = rng.uniform(0.0, 1.0);
  const double fy = rng.uniform(0.5, 1.5), py = rng.uniform(0.0, 1.0);
  const double pt = rng.uniform(0.0, 1.0);

  std::vector<std::pair<int, int>> tissue_px;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (tissue.contains(x, y)) tissue_px.emplace_back(x, y);
  check(!tissue_px.empty(), "synth: degenerate tissue region");

  for (int t = 0; t < C; ++t) {
    float* img = v.intensities.data() + t * se;
    const double slice_mod = 0.02 * std::sin(kTau * (static_cast<double>(t) / C + pt));
    for (const auto& [x, y] : tissue_px) {
      const double tex = 0.08 * std::sin(kTau * (fx * x / W + px)) *
                             std::sin(kTau * (fy * y / H + py)) +
                         slice_mod;
      img[static_cast<long long>(y) * W + x] = static_cast<float>(0.5 + tex);
    }
  }

  for (int t = 0; t < C; ++t) {
    float* img = v.intensities.data() + t * se;
    uint8_t* lab = v.labels.data() + t * se;
    for (int k = 0; k < spec.lesions_per_slice; ++k) {
      const bool small = rng.bernoulli(spec.small_lesion_fraction);
      const int area = small ? rng.uniform_int(spec.small_area_min, spec.small_area_max)
                             : rng.uniform_int(spec.large_area_min, spec.large_area_max);
      check(area <= static_cast<int>(tissue_px.size()),
            "synth: requested lesion of " + std::to_string(area) +
                " pixels exceeds the tissue region (" + std::to_string(tissue_px.size()) +
                " pixels)");

      // Lesion support: the `area` nearest unlabeled tissue pixels to a random
      // center under a randomly rotated anisotropic metric. Pixel counts are
      // exact by construction.
      const auto& [ccx, ccy] = tissue_px[rng.uniform_int(0, static_cast<int>(tissue_px.size()) - 1)];
      const double ax = rng.uniform(0.6, 1.6), ay = rng.uniform(0.6, 1.6);
      const double theta = rng.uniform(0.0, kTau);
      const double ct = std::cos(theta), st = std::sin(theta);
      std::vector<std::pair<double, long long>> cand;
      cand.reserve(tissue_px.size());
      for (const auto& [x, y] : tissue_px) {
        const long long idx = static_cast<long long>(y) * W + x;
        if (lab[idx]) continue;
        const double dx = x - ccx, dy = y - ccy;
        const double u = (ct * dx + st * dy) / ax;
        const double w2 = (-st * dx + ct * dy) / ay;
        cand.emplace_back(u * u + w2 * w2, idx);
      }
      check(area <= static_cast<int>(cand.size()),
            "synth: requested lesion of " + std::to_string(area) +
                " pixels does not fit in the remaining tissue");
      std::sort(cand.begin(), cand.end());

      const bool hyper = rng.bernoulli(0.5);
      for (int i = 0; i < area; ++i) {
        const long long idx = cand[i].second;
        lab[idx] = 1;
        const double base = img[idx];
        img[idx] = static_cast<float>(
            hyper ? std::min(0.98, base + 0.35) : std::max(0.05, base - 0.30));
      }
    }
  }
  return v;
}

std::vector<Volume> generate_synthetic_corpus(Rng& rng, const SynthSpec& spec, int volumes,
                                              const std::string& id_prefix) {
  check(volumes >= 1, "synth: need at least one volume");
  std::vector<Volume> out;
  out.reserve(static_cast<size_t>(volumes));
  for (int i = 0; i < volumes; ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_%03d", i);
    out.push_back(generate_synthetic_volume(rng, spec, id_prefix + suffix));
  }
  return out;
}

}  // namespace spin
