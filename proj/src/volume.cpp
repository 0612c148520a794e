#include "spin/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "spin/config.hpp"
#include "spin/tensor.hpp"

static_assert(std::endian::native == std::endian::little,
              "SPV1/SPINCKPT I/O assumes a little-endian host");

namespace spin {

long long Volume::lesion_pixels(int t) const {
  if (!has_labels()) return 0;
  const uint8_t* s = label_slice(t);
  long long n = 0;
  for (long long i = 0; i < slice_elems(); ++i) n += s[i];
  return n;
}

void Volume::validate() const {
  check(C >= 1 && H >= 1 && W >= 1, "volume '" + id + "': empty extents");
  check(static_cast<long long>(intensities.size()) == voxels(),
        "volume '" + id + "': intensity buffer does not match extents");
  for (const float v : intensities)
    check(std::isfinite(v), "volume '" + id + "': non-finite intensity");
  if (!labels.empty()) {
    check(static_cast<long long>(labels.size()) == voxels(),
          "volume '" + id + "': label buffer does not match extents");
    for (const uint8_t v : labels)
      check(v == 0 || v == 1, "volume '" + id + "': labels must be 0/1");
  }
}

namespace {

constexpr char kMagic[4] = {'S', 'P', 'V', '1'};

void put_u32(std::string& out, uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}

uint32_t get_u32(const std::string& s, size_t& pos) {
  check(pos + 4 <= s.size(), "SPV1: truncated file");
  uint32_t v;
  std::memcpy(&v, s.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

Volume read_volume(const std::string& path) {
  const std::string raw = read_file(path);
  check(raw.size() >= 17 && std::memcmp(raw.data(), kMagic, 4) == 0,
        "'" + path + "' is not an SPV1 volume");
  size_t pos = 4;
  Volume v;
  v.C = static_cast<int>(get_u32(raw, pos));
  v.H = static_cast<int>(get_u32(raw, pos));
  v.W = static_cast<int>(get_u32(raw, pos));
  check(pos < raw.size(), "SPV1: truncated file");
  const uint8_t has_labels = static_cast<uint8_t>(raw[pos++]);
  check(has_labels == 0 || has_labels == 1, "SPV1: bad has_labels flag in '" + path + "'");
  check(v.C >= 1 && v.H >= 1 && v.W >= 1, "SPV1: bad extents in '" + path + "'");
  const size_t n = static_cast<size_t>(v.voxels());
  check(raw.size() == pos + n * 4 + (has_labels ? n : 0),
        "SPV1: size mismatch in '" + path + "'");
  v.intensities.resize(n);
  std::memcpy(v.intensities.data(), raw.data() + pos, n * 4);
  pos += n * 4;
  if (has_labels) {
    v.labels.assign(raw.begin() + static_cast<long long>(pos), raw.end());
  }
  v.id = std::filesystem::path(path).stem().string();
  v.validate();
  return v;
}

void write_volume(const std::string& path, const Volume& v) {
  v.validate();
  std::string out;
  out.reserve(17 + v.intensities.size() * 4 + v.labels.size());
  out.append(kMagic, 4);
  put_u32(out, static_cast<uint32_t>(v.C));
  put_u32(out, static_cast<uint32_t>(v.H));
  put_u32(out, static_cast<uint32_t>(v.W));
  out.push_back(v.has_labels() ? 1 : 0);
  out.append(reinterpret_cast<const char*>(v.intensities.data()), v.intensities.size() * 4);
  if (v.has_labels())
    out.append(reinterpret_cast<const char*>(v.labels.data()), v.labels.size());
  write_file_atomic(path, out);
}

Volume normalize_volume(const Volume& v) {
  check(v.C >= 1 && v.H >= 1 && v.W >= 1, "normalize_volume: empty volume");
  Volume out = v;
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (const float x : v.intensities) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi <= lo) {
    std::fill(out.intensities.begin(), out.intensities.end(), 0.0f);
    return out;
  }
  const float scale = 1.0f / (hi - lo);
  for (auto& x : out.intensities) x = (x - lo) * scale;
  return out;
}

float dataset_mean(const std::vector<Volume>& volumes) {
  check(!volumes.empty(), "dataset_mean: no volumes");
  double sum = 0.0;
  long long n = 0;
  for (const Volume& v : volumes) {
    for (const float x : v.intensities) sum += x;
    n += v.voxels();
  }
  return static_cast<float>(sum / static_cast<double>(n));
}

std::vector<Volume> load_volume_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  check(fs::is_directory(dir), "'" + dir + "' is not a directory");
  std::vector<std::string> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".spv") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  check(!paths.empty(), "no .spv volumes found in '" + dir + "'");
  std::vector<Volume> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_volume(p));
  return out;
}

}  // namespace spin
