#include "kamosc/config.hpp"

#include <fstream>
#include <sstream>

namespace kamosc {

namespace {
std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

std::string ConfigSection::take(const std::string& key) {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing required key: " + key);
  used_.emplace(key, it->second);
  std::string v = it->second;
  kv_.erase(it);
  return v;
}

std::string ConfigSection::take_or(const std::string& key, const std::string& fallback) {
  return has(key) ? take(key) : fallback;
}

double ConfigSection::number(const std::string& key) {
  const std::string v = take(key);
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("bad number for key " + key + ": " + v);
    return x;
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad number for key " + key + ": " + v);
  }
}

double ConfigSection::number_or(const std::string& key, double fallback) {
  return has(key) ? number(key) : fallback;
}

long ConfigSection::integer(const std::string& key) {
  const std::string v = take(key);
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw ConfigError("bad integer for key " + key + ": " + v);
    return x;
  } catch (const std::invalid_argument&) {
    throw ConfigError("bad integer for key " + key + ": " + v);
  }
}

long ConfigSection::integer_or(const std::string& key, long fallback) {
  return has(key) ? integer(key) : fallback;
}

bool ConfigSection::flag_or(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const std::string v = take(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for key " + key + ": " + v);
}

std::vector<double> ConfigSection::numbers(const std::string& key) {
  const std::string v = take(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad number list for key " + key + ": " + v);
    }
  }
  if (out.empty()) throw ConfigError("empty number list for key " + key);
  return out;
}

std::vector<double> ConfigSection::numbers_or(const std::string& key,
                                              std::vector<double> fallback) {
  return has(key) ? numbers(key) : fallback;
}

void ConfigSection::reject_unknown() const {
  if (!kv_.empty()) throw ConfigError("unknown key: " + kv_.begin()->first);
}

std::map<std::string, ConfigSection> parse_config_text(const std::string& text) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string current;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("bad section header at line " + std::to_string(lineno));
      current = trimmed(line.substr(1, line.size() - 2));
      sections.try_emplace(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    if (current.empty()) throw ConfigError("key before any section at line " + std::to_string(lineno));
    if (!sections[current].emplace(key, value).second)
      throw ConfigError("duplicate key: " + key);
  }
  std::map<std::string, ConfigSection> out;
  for (auto& [name, kv] : sections) out.emplace(name, ConfigSection(std::move(kv)));
  return out;
}

std::map<std::string, ConfigSection> parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace kamosc
