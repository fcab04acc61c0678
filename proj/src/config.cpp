#include "sgt/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sgt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigSections parse_config_text(const std::string& text) {
  ConfigSections out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": empty section name");
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": empty key");
    if (section.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": key outside any [section]");
    if (out[section].count(key))
      throw std::runtime_error("config: duplicate key '" + section + "." +
                               key + "'");
    out[section][key] = value;
  }
  return out;
}

ConfigSections load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string ConfigReader::get_string(const std::string& section,
                                     const std::string& key,
                                     const std::string& fallback) {
  used_[section][key] = true;
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

int ConfigReader::get_int(const std::string& section, const std::string& key,
                          int fallback) {
  const std::string v = get_string(section, key, "");
  if (v.empty()) return fallback;
  size_t pos = 0;
  const int out = std::stoi(v, &pos);
  if (pos != v.size())
    throw std::runtime_error("config: '" + section + "." + key +
                             "' is not an integer: " + v);
  return out;
}

double ConfigReader::get_double(const std::string& section,
                                const std::string& key, double fallback) {
  const std::string v = get_string(section, key, "");
  if (v.empty()) return fallback;
  size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size())
    throw std::runtime_error("config: '" + section + "." + key +
                             "' is not a number: " + v);
  return out;
}

bool ConfigReader::get_bool(const std::string& section, const std::string& key,
                            bool fallback) {
  const std::string v = get_string(section, key, "");
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: '" + section + "." + key +
                           "' is not a boolean: " + v);
}

void ConfigReader::finish() const {
  for (const auto& [section, keys] : sections_) {
    const auto us = used_.find(section);
    for (const auto& [key, value] : keys) {
      if (us == used_.end() || !us->second.count(key))
        throw std::runtime_error("config: unknown key '" + section + "." +
                                 key + "'");
    }
  }
}

}  // namespace sgt
