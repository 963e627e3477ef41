#include "vrld/config.hpp"

#include <fstream>
#include <sstream>

#include "vrld/format.hpp"

namespace vrld {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

Value parse_typed(const std::string& type, const std::string& raw, const std::string& where) {
  if (type == "bool") {
    if (raw == "true") return true;
    if (raw == "false") return false;
    fail(ErrorKind::Config, where + ": bool must be true or false");
  }
  if (type == "int") return static_cast<std::int64_t>(parse_int(raw, where));
  if (type == "real") return parse_real(raw, where);
  if (type == "str") return raw;
  if (type == "reals") {
    Reals r;
    for (const auto& item : split_list(raw)) r.push_back(parse_real(item, where));
    return r;
  }
  if (type == "strs") return split_list(raw);
  fail(ErrorKind::Config, where + ": unknown type '" + type + "' (bool, int, real, str, reals, strs)");
}

}  // namespace

std::string format_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return format_real(x);
        else if constexpr (std::is_same_v<T, std::string>) return x;
        else if constexpr (std::is_same_v<T, Reals>) {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_real(x[i]);
          return s;
        } else {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + x[i];
          return s;
        }
      },
      v);
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  ParamMap* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorKind::Config, where + ": malformed section header");
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (!valid_name(name)) fail(ErrorKind::Config, where + ": bad section name '" + name + "'");
      if (cfg.has(name)) fail(ErrorKind::Config, where + ": section [" + name + "] repeated");
      current = &cfg.section_mut(name);
      continue;
    }
    if (!current) fail(ErrorKind::Config, where + ": key outside of any section");
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, where + ": expected 'key:type = value'");
    const std::string lhs = trim(t.substr(0, eq));
    const auto colon = lhs.find(':');
    if (colon == std::string::npos) fail(ErrorKind::Config, where + ": missing type annotation on '" + lhs + "'");
    const std::string key = trim(lhs.substr(0, colon));
    const std::string type = trim(lhs.substr(colon + 1));
    if (!valid_name(key)) fail(ErrorKind::Config, where + ": bad key '" + key + "'");
    if (current->contains(key)) fail(ErrorKind::Config, where + ": key '" + key + "' repeated");
    current->set(key, parse_typed(type, trim(t.substr(eq + 1)), where + " (" + key + ")"));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string ConfigFile::serialize() const {
  std::string out;
  for (const auto& [name, params] : sections_) {
    if (!out.empty()) out += "\n";
    out += "[" + name + "]\n";
    for (const auto& [key, value] : params.entries())
      out += key + ":" + std::string(type_name(value)) + " = " + format_value(value) + "\n";
  }
  return out;
}

bool ConfigFile::has(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.first == name) return true;
  return false;
}

const ParamMap& ConfigFile::section(const std::string& name) const {
  static const ParamMap empty;
  for (const auto& s : sections_)
    if (s.first == name) return s.second;
  return empty;
}

ParamMap& ConfigFile::section_mut(const std::string& name) {
  for (auto& s : sections_)
    if (s.first == name) return s.second;
  sections_.emplace_back(name, ParamMap{});
  return sections_.back().second;
}

void ConfigFile::remove(const std::string& name) {
  std::erase_if(sections_, [&](const auto& s) { return s.first == name; });
}

std::vector<std::string> ConfigFile::section_names() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) out.push_back(s.first);
  return out;
}

}  // namespace vrld
