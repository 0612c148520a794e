#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spin/rng.hpp"
#include "spin/volume.hpp"

namespace spin {

// Patient-level train/test split plus the small-lesion evaluation subset:
// test slices whose lesion pixel count lies in (0, 100).
struct SplitManifest {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<std::pair<std::string, int>> small_lesion_images;  // (volume id, slice)

  void validate() const;
  std::string serialize(const std::string& header_comment = "") const;
  static SplitManifest parse(const std::string& text);
  static SplitManifest load(const std::string& path);
  void save(const std::string& path, const std::string& header_comment = "") const;
};

inline constexpr int kSmallLesionMaxPixels = 100;  // exclusive upper bound

SplitManifest build_split(const std::vector<Volume>& volumes, Rng& rng, double test_fraction);

// Select the volumes named by an id list, erroring on any id that is missing
// from the set.
std::vector<Volume> select_volumes(const std::vector<Volume>& all,
                                   const std::vector<std::string>& ids);

}  // namespace spin
