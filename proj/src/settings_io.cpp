#include "pemfc/settings_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pemfc/errors.hpp"

namespace pemfc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

SettingsMap SettingsMap::parse_text(const std::string& text) {
  SettingsMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected `key = value`, got \"" + body + "\"", lineno);
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", lineno);
    if (out.has(key)) throw ParseError("duplicate key \"" + key + "\"", lineno);
    out.set(key, value);
  }
  return out;
}

SettingsMap SettingsMap::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

void SettingsMap::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void SettingsMap::set_double(const std::string& key, double value) {
  set(key, format_double(value));
}

void SettingsMap::set_int(const std::string& key, long long value) {
  set(key, std::to_string(value));
}

void SettingsMap::set_bool(const std::string& key, bool value) {
  set(key, value ? "true" : "false");
}

bool SettingsMap::has(const std::string& key) const {
  return index_.count(key) != 0;
}

std::optional<std::string> SettingsMap::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

const std::string& SettingsMap::get_string(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end())
    throw ValidationError(key, "missing required setting");
  return entries_[it->second].second;
}

double SettingsMap::get_double(const std::string& key) const {
  const std::string& raw = get_string(key);
  char* end = nullptr;
  double v = std::strtod(raw.c_str(), &end);
  if (end == raw.c_str() || *end != '\0')
    throw ValidationError(key, "not a number: \"" + raw + "\"");
  return v;
}

long long SettingsMap::get_int(const std::string& key) const {
  const std::string& raw = get_string(key);
  long long v = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (ec != std::errc{} || p != raw.data() + raw.size())
    throw ValidationError(key, "not an integer: \"" + raw + "\"");
  return v;
}

bool SettingsMap::get_bool(const std::string& key) const {
  const std::string& raw = get_string(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ValidationError(key, "not a boolean: \"" + raw + "\"");
}

std::string SettingsMap::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void SettingsMap::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  out << to_text();
  if (!out) throw IoError(path, "write failed");
}

std::string format_double(double value) {
  // Shortest representation that parses back to the same bits.
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

}  // namespace pemfc
