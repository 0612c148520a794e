#include "spin/window.hpp"

#include <cstdio>
#include <cstring>

#include "spin/tensor.hpp"

namespace spin {

PaddedVolume mean_pad(const Volume& v, int c, float mu) {
  check(c >= 1 && c % 2 == 1, "mean_pad: window width must be odd, got " + std::to_string(c));
  check(v.C >= 1, "mean_pad: empty volume");
  PaddedVolume p;
  p.C = v.C;
  p.c = c;
  p.H = v.H;
  p.W = v.W;
  p.pad_value = mu;
  const int half = (c - 1) / 2;
  const long long se = v.slice_elems();
  p.slices.assign(static_cast<size_t>(v.C + c - 1) * se, mu);
  std::memcpy(p.slices.data() + static_cast<long long>(half) * se, v.intensities.data(),
              static_cast<size_t>(v.C) * se * sizeof(float));
  return p;
}

SliceWindow extract_window(const PaddedVolume& padded, const Volume& source, int t) {
  check(t >= 0 && t < padded.C,
        "extract_window: slice index " + std::to_string(t) + " outside volume of " +
            std::to_string(padded.C) + " slices");
  check(padded.H == source.H && padded.W == source.W && padded.C == source.C,
        "extract_window: padded volume does not match its source");
  SliceWindow w;
  w.c = padded.c;
  w.H = padded.H;
  w.W = padded.W;
  w.center_index = t;
  const long long se = static_cast<long long>(padded.H) * padded.W;
  w.x.assign(padded.slice(t), padded.slice(t) + static_cast<long long>(padded.c) * se);
  if (source.has_labels()) {
    const uint8_t* lab = source.label_slice(t);
    w.ybar.assign(lab, lab + se);
  }
  return w;
}

Dataset Dataset::build(std::vector<Volume> volumes, int c, float mu) {
  check(!volumes.empty(), "dataset: no volumes");
  Dataset ds;
  ds.volumes = std::move(volumes);
  ds.c = c;
  ds.pad_mean = mu < 0.0f ? dataset_mean(ds.volumes) : mu;
  ds.padded.reserve(ds.volumes.size());
  for (size_t vi = 0; vi < ds.volumes.size(); ++vi) {
    const Volume& v = ds.volumes[vi];
    ds.padded.push_back(mean_pad(v, c, ds.pad_mean));
    for (int t = 0; t < v.C; ++t) {
      const WindowRef ref{static_cast<int>(vi), t};
      if (v.lesion_pixels(t) > 0)
        ds.lesion_windows.push_back(ref);
      else
        ds.lesion_free_windows.push_back(ref);
    }
  }
  return ds;
}

SliceWindow Dataset::window(const WindowRef& ref) const {
  return extract_window(padded[ref.volume], volumes[ref.volume], ref.t);
}

WindowRef sample_training_window_ref(Dataset& ds, Rng& rng) {
  check(ds.total_windows() > 0, "sample_training_window: empty dataset");
  if (ds.lesion_windows.empty()) {
    if (!ds.warned_no_lesions) {
      std::fprintf(stderr,
                   "warning: dataset has no lesion-bearing slices; sampling uniformly\n");
      ds.warned_no_lesions = true;
    }
    const int i = rng.uniform_int(0, static_cast<int>(ds.lesion_free_windows.size()) - 1);
    return ds.lesion_free_windows[i];
  }
  if (ds.lesion_free_windows.empty() || rng.bernoulli(0.95)) {
    const int i = rng.uniform_int(0, static_cast<int>(ds.lesion_windows.size()) - 1);
    return ds.lesion_windows[i];
  }
  const int i = rng.uniform_int(0, static_cast<int>(ds.lesion_free_windows.size()) - 1);
  return ds.lesion_free_windows[i];
}

SliceWindow sample_training_window(Dataset& ds, Rng& rng) {
  return ds.window(sample_training_window_ref(ds, rng));
}

}  // namespace spin
