#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vrld/params.hpp"

namespace vrld {

/// Sectioned, explicitly typed key-value text:
///
///   # comment
///   [sampler]
///   variant:str = svrg
///   eta:real = 0.001
///   centers:reals = 1, -1
///
/// Types: bool (true/false), int, real, str, reals and strs (comma separated).
/// Sections keep file order; keys within a section are sorted on output.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  std::string serialize() const;

  bool has(const std::string& section) const;
  const ParamMap& section(const std::string& name) const;  // empty map if absent
  ParamMap& section_mut(const std::string& name);          // creates if absent
  void remove(const std::string& name);
  std::vector<std::string> section_names() const;

  bool operator==(const ConfigFile&) const = default;

 private:
  std::vector<std::pair<std::string, ParamMap>> sections_;
};

std::string format_value(const Value& v);

}  // namespace vrld
