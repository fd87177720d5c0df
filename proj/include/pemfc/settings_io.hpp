#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pemfc {

// Flat `key = value` settings format, UTF-8, one entry per line, `#` starts a
// comment. Values are free-form strings; typed access converts on demand.
// Insertion order is preserved so serialization is deterministic.
class SettingsMap {
public:
  static SettingsMap parse_text(const std::string& text);
  static SettingsMap parse_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  void set_bool(const std::string& key, bool value);

  bool has(const std::string& key) const;
  // Throw ValidationError naming the key when missing or unconvertible.
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;

  std::optional<std::string> find(const std::string& key) const;

  std::string to_text() const;
  void write_file(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

// Shortest decimal form that round-trips exactly through parsing.
std::string format_double(double value);

}  // namespace pemfc
