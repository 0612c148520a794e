#include "spin/manifest.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "spin/config.hpp"
#include "spin/tensor.hpp"

namespace spin {

void SplitManifest::validate() const {
  std::set<std::string> train(train_ids.begin(), train_ids.end());
  for (const auto& id : test_ids)
    check(train.find(id) == train.end(), "manifest: id '" + id + "' appears in both splits");
  std::set<std::string> test(test_ids.begin(), test_ids.end());
  for (const auto& [id, slice] : small_lesion_images) {
    check(test.count(id) == 1,
          "manifest: small-lesion entry '" + id + "' is not a test volume");
    check(slice >= 0, "manifest: negative slice index for '" + id + "'");
  }
}

std::string SplitManifest::serialize(const std::string& header_comment) const {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "[train]\n";
  for (const auto& id : train_ids) os << id << "\n";
  os << "[test]\n";
  for (const auto& id : test_ids) os << id << "\n";
  os << "[small_lesion]\n";
  for (const auto& [id, slice] : small_lesion_images) os << id << " " << slice << "\n";
  return os.str();
}

SplitManifest SplitManifest::parse(const std::string& text) {
  SplitManifest m;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      check(line == "[train]" || line == "[test]" || line == "[small_lesion]",
            "manifest: unknown section '" + line + "' at line " + std::to_string(lineno));
      section = line;
      continue;
    }
    check(!section.empty(), "manifest: entry before any section at line " +
                                std::to_string(lineno));
    if (section == "[train]") {
      m.train_ids.push_back(line);
    } else if (section == "[test]") {
      m.test_ids.push_back(line);
    } else {
      const size_t sp = line.find(' ');
      check(sp != std::string::npos, "manifest: small-lesion entries need 'id slice', got '" +
                                         line + "' at line " + std::to_string(lineno));
      int slice = 0;
      try {
        slice = std::stoi(line.substr(sp + 1));
      } catch (const std::exception&) {
        fail("manifest: bad slice index in '" + line + "' at line " + std::to_string(lineno));
      }
      m.small_lesion_images.emplace_back(line.substr(0, sp), slice);
    }
  }
  m.validate();
  return m;
}

SplitManifest SplitManifest::load(const std::string& path) { return parse(read_file(path)); }

void SplitManifest::save(const std::string& path, const std::string& header_comment) const {
  write_file_atomic(path, serialize(header_comment));
}

SplitManifest build_split(const std::vector<Volume>& volumes, Rng& rng, double test_fraction) {
  check(volumes.size() >= 2, "build_split: need at least two volumes");
  check(test_fraction > 0.0 && test_fraction < 1.0,
        "build_split: test fraction must be in (0,1)");
  std::vector<int> order(volumes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  // Fisher-Yates with the seeded rng; identical seeds give identical manifests.
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(0, i)]);

  int n_test = static_cast<int>(std::max<size_t>(1, static_cast<size_t>(
                                                        volumes.size() * test_fraction + 0.5)));
  if (n_test >= static_cast<int>(volumes.size()))
    n_test = static_cast<int>(volumes.size()) - 1;

  SplitManifest m;
  for (size_t i = 0; i < order.size(); ++i) {
    const Volume& v = volumes[order[i]];
    if (static_cast<int>(i) < n_test)
      m.test_ids.push_back(v.id);
    else
      m.train_ids.push_back(v.id);
  }
  std::sort(m.train_ids.begin(), m.train_ids.end());
  std::sort(m.test_ids.begin(), m.test_ids.end());

  for (const auto& id : m.test_ids) {
    for (const Volume& v : volumes) {
      if (v.id != id) continue;
      for (int t = 0; t < v.C; ++t) {
        const long long n = v.lesion_pixels(t);
        if (n > 0 && n < kSmallLesionMaxPixels) m.small_lesion_images.emplace_back(id, t);
      }
    }
  }
  m.validate();
  return m;
}

std::vector<Volume> select_volumes(const std::vector<Volume>& all,
                                   const std::vector<std::string>& ids) {
  std::vector<Volume> out;
  std::string missing;
  for (const auto& id : ids) {
    bool found = false;
    for (const Volume& v : all) {
      if (v.id == id) {
        out.push_back(v);
        found = true;
        break;
      }
    }
    if (!found) missing += missing.empty() ? id : (", " + id);
  }
  check(missing.empty(), "volumes missing from dataset: " + missing);
  return out;
}

}  // namespace spin
