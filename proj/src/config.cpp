#include "ks2d/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ks2d {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& name) {
  Config cfg;
  cfg.name_ = name;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(name + ":" + std::to_string(lineno) + ": empty section name");
      }
      cfg.sections_[section];  // a section may legitimately stay empty
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value, got '" +
                        line + "'");
    }
    if (section.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": key outside any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key '" + section +
                        "." + key + "' (first defined at line " +
                        std::to_string(sec[key].line) + ")");
    }
    sec[key] = Entry{value, lineno, false};
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

const Config::Entry& Config::require(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) {
    throw ConfigError(name_ + ": missing required key '" + section + "." + key + "'");
  }
  e->consumed = true;
  return *e;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  return require(section, key).value;
}

std::string Config::get_string_or(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  e->consumed = true;
  return e->value;
}

namespace {

double to_real(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError(where + ": expected a number, got '" + v + "'");
  }
  return x;
}

long to_int(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ConfigError(where + ": expected an integer, got '" + v + "'");
  }
  return x;
}

}  // namespace

double Config::get_real(const std::string& section, const std::string& key) const {
  return to_real(require(section, key).value, name_ + ": " + section + "." + key);
}

double Config::get_real_or(const std::string& section, const std::string& key,
                           double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  e->consumed = true;
  return to_real(e->value, name_ + ": " + section + "." + key);
}

long Config::get_int(const std::string& section, const std::string& key) const {
  return to_int(require(section, key).value, name_ + ": " + section + "." + key);
}

long Config::get_int_or(const std::string& section, const std::string& key,
                        long fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  e->consumed = true;
  return to_int(e->value, name_ + ": " + section + "." + key);
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  e->consumed = true;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(name_ + ": " + section + "." + key + ": expected a boolean, got '" +
                    e->value + "'");
}

std::vector<double> Config::get_real_list(const std::string& section,
                                          const std::string& key) const {
  const std::string raw = require(section, key).value;
  const std::string where = name_ + ": " + section + "." + key;
  std::vector<double> out;
  std::string item;
  std::istringstream ss(raw);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw ConfigError(where + ": empty list element");
    }
    out.push_back(to_real(item, where));
  }
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

void Config::ensure_all_consumed() const {
  std::vector<std::string> leftovers;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, entry] : entries) {
      if (!entry.consumed) leftovers.push_back(section + "." + key);
    }
  }
  if (!leftovers.empty()) {
    std::string msg = name_ + ": unknown key(s):";
    for (const auto& k : leftovers) msg += " " + k;
    throw ConfigError(msg);
  }
}

}  // namespace ks2d
