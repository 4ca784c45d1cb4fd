#include "churnnet/config.hpp"

#include <fstream>
#include <stdexcept>

namespace churnnet {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: missing '=' on line " +
                                  std::to_string(lineno));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key on line " +
                                  std::to_string(lineno));
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse(in);
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) != 0;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  }
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' is not a number");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: key '" + key + "' is not a boolean");
}

std::vector<std::string> Config::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::string> out;
  std::string item;
  for (char c : it->second) {
    if (c == ',') {
      std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  std::string t = trim(item);
  if (!t.empty()) out.push_back(t);
  return out;
}

}  // namespace churnnet
