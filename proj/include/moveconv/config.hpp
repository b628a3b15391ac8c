#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace moveconv {

// Flat typed key-value config with [section] headers; keys are addressed as
// "section.key". Every key a subcommand understands is touched through a
// getter; require_all_consumed() then rejects configs carrying unknown keys.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  long get_int(const std::string& key, long def) const;
  bool get_bool(const std::string& key, bool def) const;
  // comma-separated doubles
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& def) const;

  void set(const std::string& key, const std::string& value);
  void require_all_consumed() const;  // throws listing never-requested keys

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> touched_;
  std::string origin_;
};

}  // namespace moveconv
