#pragma once

#include <string>
#include <utility>
#include <vector>

namespace spin {

// Flat key=value text block used for model/train configs and provenance
// stamps. Lines starting with '#' are comments; key order is preserved so
// serialization is byte-stable.
class KeyValue {
 public:
  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, long long v);
  void set_double(const std::string& key, double v);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;              // throws if missing
  std::string get_or(const std::string& key, const std::string& def) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

  std::string serialize(const std::string& header_comment = "") const;
  static KeyValue parse(const std::string& text);
  static KeyValue load(const std::string& path);
  void save(const std::string& path, const std::string& header_comment = "") const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// Parse "32,64,128" style integer lists.
std::vector<int> parse_int_list(const std::string& s);
std::string format_int_list(const std::vector<int>& v);

// Parse "0:3e-4,400:1e-4" style (epoch, value) schedules.
std::vector<std::pair<int, double>> parse_schedule(const std::string& s);
std::string format_schedule(const std::vector<std::pair<int, double>>& sched);

// Write a file atomically: write to a temp sibling, then rename over the
// destination, so failures never leave partial outputs behind.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

// Stable formatting for doubles in text artifacts (shortest round-trip form).
std::string format_double(double v);

}  // namespace spin
