#include "moveconv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace moveconv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                 ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!cfg.kv_.emplace(full, value).second)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": duplicate key " + full);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has(const std::string& key) const {
  touched_.insert(key);
  return kv_.count(key) > 0;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  return it == kv_.end() ? def : it->second;
}

std::string Config::require_string(const std::string& key) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw std::runtime_error("config: missing required key " + key);
  return it->second;
}

double Config::get_double(const std::string& key, double def) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end != it->second.c_str() + it->second.size())
    throw std::runtime_error("config: key " + key + " is not a number: " + it->second);
  return v;
}

long Config::get_int(const std::string& key, long def) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  char* end = nullptr;
  const long v = std::strtol(it->second.c_str(), &end, 10);
  if (end != it->second.c_str() + it->second.size())
    throw std::runtime_error("config: key " + key + " is not an integer: " + it->second);
  return v;
}

bool Config::get_bool(const std::string& key, bool def) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: key " + key + " is not a boolean: " + v);
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& def) const {
  touched_.insert(key);
  const auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<double> out;
  std::istringstream in(it->second);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end != item.c_str() + item.size())
      throw std::runtime_error("config: key " + key + " has a non-numeric entry: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::runtime_error("config: key " + key + " is an empty list");
  return out;
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void Config::require_all_consumed() const {
  std::string unknown;
  for (const auto& [k, v] : kv_)
    if (!touched_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty())
    throw std::runtime_error("config " + origin_ + ": unknown keys: " + unknown);
}

}  // namespace moveconv
