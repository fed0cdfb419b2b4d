#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pharmatimeline {

// Key-value run configuration:
//
//   # comment
//   max_gap_days = 42
//   negation_cues = no|not|denies|no evidence of|without
//   ethnicity_map = white british:White|black caribbean:Black
//
// Values keep internal whitespace; keys and values are trimmed. List values
// use '|' between items, map values 'key:value' pairs inside a list.
class Config {
 public:
  Config() = default;

  static Config load(const std::string& path);
  static Config from_string(std::string_view text, const std::string& origin = "<config>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback = "") const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<std::pair<std::string, std::string>> get_map(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_ = "<config>";
};

std::string trim(std::string_view s);

}  // namespace pharmatimeline
