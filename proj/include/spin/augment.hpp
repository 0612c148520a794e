#pragma once

#include "spin/rng.hpp"
#include "spin/window.hpp"

namespace spin {

// Training augmentation. With probability p the window is transformed by, in
// order: horizontal flip (prob 0.5), vertical flip (prob 0.5), rotation by an
// angle drawn from Uniform(-30, 30) degrees about the image center, and
// additive zero-mean Gaussian noise with sigma 0.01 on intensities only. All
// c images and the label are transformed identically; intensities resample
// bilinearly and labels nearest-neighbor with zero fill, so labels stay
// binary and aligned with the center image.
SliceWindow augment(const SliceWindow& w, Rng& rng, double p);

// Rotation primitive shared with tests: `deg` degrees counter-clockwise about
// the image center.
void rotate_plane_bilinear(const float* src, float* dst, int H, int W, double deg);
void rotate_plane_nearest(const uint8_t* src, uint8_t* dst, int H, int W, double deg);

// Additive zero-mean Gaussian noise, intensities only.
void add_gaussian_noise(std::vector<float>& values, Rng& rng, double sigma);

}  // namespace spin
