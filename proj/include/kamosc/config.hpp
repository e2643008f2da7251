#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kamosc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One [section] of key = value pairs; reads consume keys so leftovers can be
/// rejected as unknown.
class ConfigSection {
 public:
  ConfigSection() = default;
  explicit ConfigSection(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string take(const std::string& key);  ///< throws ConfigError if missing
  std::string take_or(const std::string& key, const std::string& fallback);
  double number(const std::string& key);
  double number_or(const std::string& key, double fallback);
  long integer(const std::string& key);
  long integer_or(const std::string& key, long fallback);
  bool flag_or(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key);                  ///< comma separated
  std::vector<double> numbers_or(const std::string& key, std::vector<double> fallback);

  void reject_unknown() const;  ///< throws on any unconsumed key
  const std::map<std::string, std::string>& raw() const { return kv_; }
  const std::map<std::string, std::string>& consumed() const { return used_; }

 private:
  std::map<std::string, std::string> kv_;
  std::map<std::string, std::string> used_;
};

/// Sectioned key = value text: `[name]` headers, `#` comments, blank lines.
std::map<std::string, ConfigSection> parse_config_file(const std::string& path);
std::map<std::string, ConfigSection> parse_config_text(const std::string& text);

}  // namespace kamosc
