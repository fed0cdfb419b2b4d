#include "pharmatimeline/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "pharmatimeline/csv.hpp"
#include "pharmatimeline/errors.hpp"

namespace pharmatimeline {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

Config Config::load(const std::string& path) {
  return from_string(read_file(path), path);
}

Config Config::from_string(std::string_view text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin, line_no, "expected 'key = value', got '" + stripped + "'");
    }
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) {
      throw ParseError(origin, line_no, "empty key");
    }
    cfg.values_[key] = value;
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  int out = 0;
  const std::string& v = it->second;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(origin_ + ": key '" + key + "': expected integer, got '" + v + "'");
  }
  return out;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  uint64_t out = 0;
  const std::string& v = it->second;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(origin_ + ": key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  const std::string& v = it->second;
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) {
    throw ParseError(origin_ + ": key '" + key + "': expected number, got '" + v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  std::string v;
  for (char c : it->second) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError(origin_ + ": key '" + key + "': expected boolean, got '" + it->second + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return out;
  std::string_view v = it->second;
  size_t pos = 0;
  while (pos <= v.size()) {
    size_t bar = v.find('|', pos);
    std::string_view item = v.substr(pos, bar == std::string_view::npos ? v.size() - pos : bar - pos);
    out.push_back(trim(item));
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::get_map(const std::string& key) const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& item : get_list(key)) {
    size_t colon = item.rfind(':');
    if (colon == std::string::npos) {
      throw ParseError(origin_ + ": key '" + key + "': expected 'name:value' entries, got '" + item + "'");
    }
    out.emplace_back(trim(std::string_view(item).substr(0, colon)),
                     trim(std::string_view(item).substr(colon + 1)));
  }
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

}  // namespace pharmatimeline
