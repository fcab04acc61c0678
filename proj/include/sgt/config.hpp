#pragma once

// Run configuration files: UTF-8 "key = value" lines grouped under bracketed
// section headers. '#' starts a comment. Unknown sections or keys are hard
// errors so typos cannot silently change a run.

#include <map>
#include <string>

namespace sgt {

using ConfigSections = std::map<std::string, std::map<std::string, std::string>>;

ConfigSections parse_config_text(const std::string& text);
ConfigSections load_config_file(const std::string& path);

// Typed access with defaults; every consumed key is recorded so the caller
// can reject unknown leftovers via finish().
class ConfigReader {
 public:
  explicit ConfigReader(ConfigSections sections)
      : sections_(std::move(sections)) {}

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback);
  int get_int(const std::string& section, const std::string& key,
              int fallback);
  double get_double(const std::string& section, const std::string& key,
                    double fallback);
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback);

  // Throws if any key was never consumed.
  void finish() const;

 private:
  ConfigSections sections_;
  std::map<std::string, std::map<std::string, bool>> used_;
};

}  // namespace sgt
