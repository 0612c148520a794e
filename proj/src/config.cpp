#include "spin/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spin/tensor.hpp"

namespace spin {

void KeyValue::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : items_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  items_.emplace_back(key, value);
}

void KeyValue::set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

void KeyValue::set_double(const std::string& key, double v) { set(key, format_double(v)); }

bool KeyValue::has(const std::string& key) const {
  for (const auto& [k, v] : items_)
    if (k == key) return true;
  return false;
}

const std::string& KeyValue::get(const std::string& key) const {
  for (const auto& [k, v] : items_)
    if (k == key) return v;
  fail("config: missing key '" + key + "'");
}

std::string KeyValue::get_or(const std::string& key, const std::string& def) const {
  return has(key) ? get(key) : def;
}

long long KeyValue::get_int(const std::string& key) const {
  const std::string& s = get(key);
  size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    fail("config: key '" + key + "' has non-integer value '" + s + "'");
  }
  check(pos == s.size(), "config: key '" + key + "' has non-integer value '" + s + "'");
  return v;
}

double KeyValue::get_double(const std::string& key) const {
  const std::string& s = get(key);
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail("config: key '" + key + "' has non-numeric value '" + s + "'");
  }
  check(pos == s.size(), "config: key '" + key + "' has non-numeric value '" + s + "'");
  return v;
}

std::string KeyValue::serialize(const std::string& header_comment) const {
  std::ostringstream os;
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  for (const auto& [k, v] : items_) os << k << "=" << v << "\n";
  return os.str();
}

KeyValue KeyValue::parse(const std::string& text) {
  KeyValue kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    check(eq != std::string::npos,
          "config: line " + std::to_string(lineno) + " is not key=value: '" + line + "'");
    kv.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return kv;
}

KeyValue KeyValue::load(const std::string& path) { return parse(read_file(path)); }

void KeyValue::save(const std::string& path, const std::string& header_comment) const {
  write_file_atomic(path, serialize(header_comment));
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      fail("expected comma-separated integers, got '" + s + "'");
    }
    check(pos == tok.size(), "expected comma-separated integers, got '" + s + "'");
    out.push_back(v);
  }
  check(!out.empty(), "expected a non-empty integer list, got '" + s + "'");
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::vector<std::pair<int, double>> parse_schedule(const std::string& s) {
  std::vector<std::pair<int, double>> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    const size_t colon = tok.find(':');
    check(colon != std::string::npos,
          "schedule entries must look like epoch:value, got '" + tok + "'");
    try {
      out.emplace_back(std::stoi(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
    } catch (const std::exception&) {
      fail("schedule entries must look like epoch:value, got '" + tok + "'");
    }
  }
  check(!out.empty(), "expected a non-empty schedule, got '" + s + "'");
  return out;
}

std::string format_schedule(const std::vector<std::pair<int, double>>& sched) {
  std::ostringstream os;
  for (size_t i = 0; i < sched.size(); ++i) {
    if (i) os << ',';
    os << sched[i].first << ':' << format_double(sched[i].second);
  }
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path dst(path);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  const fs::path tmp = dst.parent_path() / (dst.filename().string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, dst);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open file '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char probe[64];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::stod(probe) == v) return probe;
  }
  return buf;
}

}  // namespace spin
