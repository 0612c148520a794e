#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spin/rng.hpp"
#include "spin/volume.hpp"

namespace spin {

// A volume with (c-1)/2 constant mean-valued slices prepended and appended
// along the slice axis; original content sits centered and untouched.
struct PaddedVolume {
  int C = 0;  // original slice count
  int c = 1;  // window width
  int H = 0, W = 0;
  float pad_value = 0.0f;
  std::vector<float> slices;  // (C + c - 1) * H * W

  int padded_slices() const { return C + c - 1; }
  const float* slice(int i) const { return slices.data() + static_cast<long long>(i) * H * W; }
};

// A c x H x W input block centered on one target image, plus that image's
// binary label (empty when the source volume is unlabeled).
struct SliceWindow {
  int c = 0, H = 0, W = 0;
  std::vector<float> x;        // c*H*W
  std::vector<uint8_t> ybar;   // H*W or empty
  int center_index = 0;        // slice index into the original volume
};

PaddedVolume mean_pad(const Volume& v, int c, float mu);

// Window over padded indices [t, t+c-1]; its center is original slice t.
SliceWindow extract_window(const PaddedVolume& padded, const Volume& source, int t);

// Training-side view of a volume set: windows indexed and classified by
// whether the center slice carries any lesion.
struct WindowRef {
  int volume = 0;
  int t = 0;
};

struct Dataset {
  std::vector<Volume> volumes;       // normalized
  std::vector<PaddedVolume> padded;  // cached mean-padded copies
  float pad_mean = 0.0f;
  int c = 1;
  std::vector<WindowRef> lesion_windows;
  std::vector<WindowRef> lesion_free_windows;
  bool warned_no_lesions = false;

  long long total_windows() const {
    return static_cast<long long>(lesion_windows.size() + lesion_free_windows.size());
  }

  // `mu`: padding mean; pass a negative value to compute it from `volumes`
  // (training split behaviour, avoiding test leakage).
  static Dataset build(std::vector<Volume> volumes, int c, float mu = -1.0f);

  SliceWindow window(const WindowRef& ref) const;
};

// Draw one training window: with probability 0.95 the center slice carries at
// least one lesion pixel, otherwise it is uniform among lesion-free centers.
// Falls back to uniform sampling (with a one-time warning on stderr) when the
// dataset has no lesion slices at all.
SliceWindow sample_training_window(Dataset& ds, Rng& rng);
WindowRef sample_training_window_ref(Dataset& ds, Rng& rng);

}  // namespace spin
