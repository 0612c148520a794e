#include "spin/checkpoint.hpp"

#include <cstring>
#include <map>

#include "spin/config.hpp"

namespace spin {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'I', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

uint32_t get_u32(const std::string& s, size_t& pos, const std::string& path) {
  check(pos + 4 <= s.size(), "checkpoint '" + path + "': truncated");
  uint32_t v;
  std::memcpy(&v, s.data() + pos, 4);
  pos += 4;
  return v;
}

void put_record(std::string& out, const std::string& name, const Shape& shape,
                const float* values, size_t n) {
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<uint32_t>(shape.size()));
  for (const int d : shape) put_u32(out, static_cast<uint32_t>(d));
  out.append(reinterpret_cast<const char*>(values), n * 4);
}

struct Record {
  Shape shape;
  std::vector<float> values;
};

std::map<std::string, Record> read_records(const std::string& path) {
  const std::string raw = read_file(path);
  check(raw.size() >= 12 && std::memcmp(raw.data(), kMagic, 8) == 0,
        "'" + path + "' is not a SPINCKPT checkpoint");
  size_t pos = 8;
  const uint32_t version = get_u32(raw, pos, path);
  check(version == kVersion, "checkpoint '" + path + "': unsupported version " +
                                 std::to_string(version));
  std::map<std::string, Record> records;
  while (pos < raw.size()) {
    const uint32_t name_len = get_u32(raw, pos, path);
    check(pos + name_len <= raw.size(), "checkpoint '" + path + "': truncated name");
    std::string name(raw.data() + pos, name_len);
    pos += name_len;
    const uint32_t rank = get_u32(raw, pos, path);
    Record rec;
    long long n = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      const uint32_t d = get_u32(raw, pos, path);
      rec.shape.push_back(static_cast<int>(d));
      n *= d;
    }
    check(pos + static_cast<size_t>(n) * 4 <= raw.size(),
          "checkpoint '" + path + "': truncated data for '" + name + "'");
    rec.values.resize(static_cast<size_t>(n));
    std::memcpy(rec.values.data(), raw.data() + pos, static_cast<size_t>(n) * 4);
    pos += static_cast<size_t>(n) * 4;
    check(records.emplace(std::move(name), std::move(rec)).second,
          "checkpoint '" + path + "': duplicate record");
  }
  return records;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<float>*>>& params,
                     const AdamState<float>* adam) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  for (const auto& [name, p] : params) {
    put_record(out, name, p->shape(), p->data().data(), p->data().size());
  }
  if (adam) {
    check(adam->m.size() == params.size(),
          "save_checkpoint: optimizer state does not match the parameter list");
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& [name, p] = params[i];
      put_record(out, name + "/m", p->shape(), adam->m[i].data(), adam->m[i].size());
      put_record(out, name + "/v", p->shape(), adam->v[i].data(), adam->v[i].size());
    }
    const float step = static_cast<float>(adam->step);
    put_record(out, "adam/step", {1}, &step, 1);
  }
  write_file_atomic(path, out);
}

void load_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor<float>*>>& params,
                     AdamState<float>* adam) {
  const auto records = read_records(path);
  for (const auto& [name, p] : params) {
    const auto it = records.find(name);
    check(it != records.end(), "checkpoint '" + path + "': missing parameter '" + name + "'");
    check(it->second.shape == p->shape(),
          "checkpoint '" + path + "': parameter '" + name + "' has shape " +
              shape_str(it->second.shape) + ", model expects " + shape_str(p->shape()));
    p->data() = it->second.values;
  }
  if (!adam) return;
  const auto step_it = records.find("adam/step");
  if (step_it == records.end()) return;  // no optimizer state in this file
  adam->m.clear();
  adam->v.clear();
  for (const auto& [name, p] : params) {
    const auto mit = records.find(name + "/m");
    const auto vit = records.find(name + "/v");
    check(mit != records.end() && vit != records.end(),
          "checkpoint '" + path + "': incomplete optimizer state for '" + name + "'");
    adam->m.push_back(mit->second.values);
    adam->v.push_back(vit->second.values);
  }
  adam->step = static_cast<long long>(step_it->second.values[0]);
}

}  // namespace spin
