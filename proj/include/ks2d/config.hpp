#pragma once

// Sectioned key = value configuration files:
//
//   # comment
//   [section]
//   key = value
//   list_key = 0.2, 0.1, 0.05
//
// Keys are tracked as they are consumed; ensure_all_consumed() turns every
// leftover key into a ConfigError, so typos never pass silently. Duplicate
// keys within a section are errors for the same reason.

#include <map>
#include <string>
#include <vector>

#include "ks2d/errors.hpp"

namespace ks2d {

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& name = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  // Typed getters; the _or variants fall back to a default when the key is
  // absent. All getters mark the key as consumed.
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_real(const std::string& section, const std::string& key) const;
  double get_real_or(const std::string& section, const std::string& key, double fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int_or(const std::string& section, const std::string& key, long fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_real_list(const std::string& section, const std::string& key) const;

  // Throws ConfigError listing every key that was never consumed.
  void ensure_all_consumed() const;

  const std::string& text() const { return text_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& require(const std::string& section, const std::string& key) const;

  std::string name_;
  std::string text_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace ks2d
