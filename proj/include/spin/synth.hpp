#pragma once

#include <string>
#include <vector>

#include "spin/rng.hpp"
#include "spin/volume.hpp"

namespace spin {

// Recipe for one synthetic scan: a smooth elliptical tissue region with
// low-frequency texture, plus hyper/hypo-intense lesion blobs whose binary
// labels exactly mark their support. Lesion pixel counts are drawn from the
// small range with probability small_lesion_fraction, otherwise from the
// large range, so corpora with a prescribed share of sub-100-pixel lesions
// can be produced.
struct SynthSpec {
  int C = 8, H = 32, W = 32;
  int lesions_per_slice = 1;
  double small_lesion_fraction = 0.5;
  int small_area_min = 4, small_area_max = 99;
  int large_area_min = 100, large_area_max = 200;

  void validate() const;
};

Volume generate_synthetic_volume(Rng& rng, const SynthSpec& spec, const std::string& id);

std::vector<Volume> generate_synthetic_corpus(Rng& rng, const SynthSpec& spec, int volumes,
                                              const std::string& id_prefix = "vol");

}  // namespace spin
