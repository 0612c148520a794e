#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spin {

// A 3-D scan: C slices of H x W intensities with an optional per-voxel binary
// label volume of identical shape.
struct Volume {
  std::string id;
  int C = 0, H = 0, W = 0;
  std::vector<float> intensities;  // C*H*W, row-major
  std::vector<uint8_t> labels;     // empty, or C*H*W of {0,1}
  std::string meta;                // opaque spacing/provenance pass-through

  bool has_labels() const { return !labels.empty(); }
  long long voxels() const { return static_cast<long long>(C) * H * W; }
  long long slice_elems() const { return static_cast<long long>(H) * W; }

  const float* slice(int t) const { return intensities.data() + t * slice_elems(); }
  const uint8_t* label_slice(int t) const { return labels.data() + t * slice_elems(); }

  // Lesion pixels in slice t (0 when unlabeled).
  long long lesion_pixels(int t) const;

  void validate() const;
};

// SPV1 container: magic "SPV1", u32 C,H,W, u8 has_labels, little-endian f32
// intensities, then raw u8 labels if present.
Volume read_volume(const std::string& path);
void write_volume(const std::string& path, const Volume& v);

// Per-volume min-max scaling to [0,1]; a constant volume maps to all zeros.
Volume normalize_volume(const Volume& v);

// Mean intensity over a set of volumes (the padding value source).
float dataset_mean(const std::vector<Volume>& volumes);

// Load every *.spv file in a directory, sorted by filename.
std::vector<Volume> load_volume_dir(const std::string& dir);

}  // namespace spin
